import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullwave.asymptotic import (
    ClassifyParams,
    Kind,
    NonlinearitySyntaxError,
    QuadraticNonlinearity,
    Verdict,
    asymptotic_coefficients,
    bump_profile,
    check_null_condition,
    classify,
    fibonacci_sphere,
    integrate_asymptotic,
    make_profile,
    model_family,
    null_form_q0,
    parse_nonlinearity,
    plateau_profile,
    q_grid,
    riccati_blowup_oracle,
    semilinear_dt_squared,
)

unit = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-2)


@settings(max_examples=50, deadline=None)
@given(unit)
def test_dt_squared_coefficients(w):
    A = asymptotic_coefficients(semilinear_dt_squared(), w).A
    expected = np.zeros((3, 3))
    expected[1, 1] = 0.25
    np.testing.assert_allclose(A, expected, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(unit)
def test_q0_coefficients_vanish(w):
    assert np.max(np.abs(asymptotic_coefficients(null_form_q0(), w).A)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(unit, st.floats(-3, 3, allow_nan=False))
def test_model_family_only_a02(w, c1):
    A = asymptotic_coefficients(model_family(c1), w).A
    assert A[0, 2] == pytest.approx(-c1 / 2, abs=1e-12)
    B = A.copy()
    B[0, 2] = 0
    assert np.max(np.abs(B)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10, allow_nan=False), unit)
def test_bilinear_in_coefficients(lam, w):
    nl = parse_nonlinearity("t,x,0.3\n,xy,-1.25\nz,tt,2")
    a = asymptotic_coefficients(nl.scaled(lam), w).A
    b = lam * asymptotic_coefficients(nl, w).A
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


def test_rotation_invariance_on_grid():
    for nl in (semilinear_dt_squared(), null_form_q0(), model_family(1.0)):
        As = [asymptotic_coefficients(nl, w).A for w in fibonacci_sphere(32)]
        assert max(np.max(np.abs(A - As[0])) for A in As) < 1e-12


def test_null_condition_checks():
    assert check_null_condition(null_form_q0(), 32)[0]
    ok, worst = check_null_condition(semilinear_dt_squared(), 32)
    assert not ok and worst == pytest.approx(0.25)
    assert check_null_condition(QuadraticNonlinearity(), 8) == (True, 0.0)


def test_parser_grammar():
    nl = parse_nonlinearity("# comment\nt,t,1.0  # trailing\n\n,xx+yy+zz,-2; x,y,0.5")
    assert len(nl.terms) == 5
    assert nl.terms[0].alpha == (0,) and nl.terms[0].beta == (0,)
    assert nl.terms[1].alpha == () and nl.terms[1].beta == (1, 1)


@pytest.mark.parametrize("bad,line", [("t,t", 1), ("t,t,1\nq,t,1", 2), ("t,ttt,1", 1), ("t,t,abc", 1), ("t,t,inf", 1)])
def test_parser_errors_name_line(bad, line):
    with pytest.raises(NonlinearitySyntaxError, match=f"line {line}"):
        parse_nonlinearity(bad)


def test_zero_a_keeps_profile():
    q = q_grid()
    init = bump_profile(q, 0.3)
    _, out = integrate_asymptotic(np.zeros((3, 3)), init, init.s + 100.0, ds=0.01)
    assert out.verdict is Verdict.COMPLETED and out.n_steps >= 10_000
    profs, _ = integrate_asymptotic(np.zeros((3, 3)), init, 100.0, checkpoints=[100.0])
    assert np.max(np.abs(profs[-1].V - init.V)) < 1e-10


@pytest.mark.parametrize("v0", [1.0, 0.5, 0.2])
def test_riccati_plateau(v0):
    A = np.zeros((3, 3))
    A[1, 1] = 0.25
    q = q_grid()
    oracle = riccati_blowup_oracle(0.25, v0)
    errs = []
    for ds in (0.02, 0.01, 0.005):
        init = plateau_profile(q, v0)
        _, out = integrate_asymptotic(A, init, 10 * oracle, ds=ds)
        assert out.blew_up
        errs.append(abs(out.s_star - oracle) / oracle)
    assert errs[-1] < 0.01
    assert errs[2] <= errs[0]


def test_riccati_oracle_values():
    assert riccati_blowup_oracle(0.25, 1.0) == pytest.approx(2.0)
    assert riccati_blowup_oracle(0.25, 0.01, s0=1.0) == pytest.approx(201.0)
    assert riccati_blowup_oracle(0.0, 1.0) == np.inf


def test_quasilinear_small_data_global():
    A = np.zeros((3, 3))
    A[0, 2] = -0.5
    q = q_grid()
    init = bump_profile(q, 0.01)
    _, out = integrate_asymptotic(A, init, init.s + 20.0)
    assert out.verdict is Verdict.COMPLETED
    assert out.history_max_v.max() / out.history_max_v[0] < 10


def test_support_preserved():
    A = np.zeros((3, 3))
    A[0, 2] = -0.5
    A[1, 1] = 0.05
    q = q_grid()
    init = bump_profile(q, 0.05)
    profs, out = integrate_asymptotic(A, init, 5.0, checkpoints=[2.5, 5.0])
    for p in profs:
        assert np.all(p.Phi[q >= 1.0] == 0.0)


def test_make_profile_roundtrip():
    q = q_grid()
    V = np.where(np.abs(q + 1) < 0.5, np.cos(np.pi * (q + 1)) ** 2, 0.0)
    p = make_profile(q, V)
    dPhi = np.gradient(p.Phi, q)
    assert np.max(np.abs(dPhi - V)) < 0.01


def test_classify_examples():
    assert classify(null_form_q0()).kind is Kind.CLASSICAL_NULL
    c = classify(semilinear_dt_squared(), ClassifyParams(blowup_factor=1e6))
    assert c.kind is Kind.BLOWUP
    assert abs(c.s_star - c.oracle_s_star) / c.oracle_s_star < 0.01
    w = classify(model_family(1.0))
    assert w.kind is Kind.WEAK_NULL_EVIDENCE and w.accepted
    d = w.to_dict()
    assert d["kind"] == "WeakNullEvidence" and "growth_exponent" in d
