import pytest

from nullwave.eikonal import rho_fields, trace_characteristics
from nullwave.radial_solver import Scenario, run


@pytest.fixture(scope="session")
def model_run():
    return run(Scenario(nonlinearity="model", epsilon=0.01, dr=0.025, t_end=200.0, output_every=0.2))


@pytest.fixture(scope="session")
def model_eikonal(model_run):
    bundle = trace_characteristics(model_run)
    return bundle, rho_fields(bundle, model_run)


@pytest.fixture(scope="session")
def linear_run():
    return run(Scenario(nonlinearity="linear", epsilon=0.01, dr=0.025, t_end=40.0, output_every=0.2))


@pytest.fixture(scope="session")
def linear_eikonal(linear_run):
    bundle = trace_characteristics(linear_run)
    return bundle, rho_fields(bundle, linear_run)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
