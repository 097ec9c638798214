"""YAML run and sweep configuration with line-numbered validation errors.

A run config is one document::

    scenario:
      nonlinearity: model     # model | general | semilinear | linear
      epsilon: 0.01
      c1: 1.0
      profile: {kind: bump, radius: 1.0}
      dr: 0.025
      t_end: 200
      output_every: 0.2
    eikonal:
      enabled: true
      nu: 0.9
    diagnostics:
      inequalities: [energy_weighted, poincare, klainerman_sobolev]
      fits: [sup_dphi]
      kappa: 1.0
      nu_prime: 0.5
    output:
      directory: out/model

A sweep config adds ``epsilons`` and ``parallel`` next to a ``base`` run config.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .diagnostics import DECAY_QUANTITIES
from .radial_solver import Profile, Scenario

INEQUALITY_IDS = ("energy_weighted", "poincare", "klainerman_sobolev", "hormander")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        loc = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(loc + message)


@dataclass(frozen=True)
class EikonalConfig:
    enabled: bool = True
    nu: float = 0.9
    record_dp: float = 0.5
    fine_extent: float = 4.0
    growth: float = 1.05
    csv_label_stride: int = 8


@dataclass(frozen=True)
class DiagnosticsConfig:
    inequalities: tuple[str, ...] = ("energy_weighted", "poincare", "klainerman_sobolev")
    fits: tuple[str, ...] = ("sup_dphi",)
    near_cone_only: bool = True
    kappa: float = 1.0
    nu_prime: float = 0.5
    ks_samples: int = 12
    residual_stride: int = 5


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    snapshot_stride: int = 25
    r_stride: int = 8


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = field(default_factory=Scenario)
    eikonal: EikonalConfig = field(default_factory=EikonalConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def with_epsilon(self, epsilon: float) -> "RunConfig":
        return dataclasses.replace(self, scenario=dataclasses.replace(self.scenario, epsilon=epsilon))


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    epsilons: tuple[float, ...]
    parallel: int = 1

    def __post_init__(self):
        if not self.epsilons:
            raise ValueError("sweep field 'epsilons' must not be empty")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("sweep field 'epsilons' must be positive")
        if len(set(self.epsilons)) != len(self.epsilons):
            raise ValueError("sweep field 'epsilons' must be distinct")
        if self.parallel < 1:
            raise ValueError("sweep field 'parallel' must be >= 1")


# --- parsing ------------------------------------------------------------------------

def _lines(node, path=()) -> dict[tuple, int]:
    """Map every key path of a composed YAML tree to its 1-based line."""
    out = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            sub = path + (k.value,)
            out[sub] = k.start_mark.line + 1
            out.update({p: ln for p, ln in _lines(v, sub).items() if p != sub})
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out.update(_lines(v, path + (i,)))
    return out


class _Ctx:
    def __init__(self, lines: dict, source: str):
        self.lines = lines
        self.source = source

    def line(self, path: tuple) -> int | None:
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def fail(self, message: str, path: tuple):
        raise ConfigError(message, self.line(path), self.source)


def _load(text: str, source: str) -> tuple[Any, _Ctx]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    lines = _lines(node) if node is not None else {}
    return data, _Ctx(lines, source)


def _section(cls, data, ctx: _Ctx, path: tuple, convert=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        ctx.fail(f"section {'.'.join(map(str, path))!r} must be a mapping", path)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            ctx.fail(f"unknown field {'.'.join(map(str, path + (key,)))!r}", path + (key,))
    kwargs = dict(data)
    if convert:
        kwargs = convert(kwargs)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        bad = next((k for k in data if f"'{k}'" in msg), None)
        if bad is None:
            bad = next((k for k in data if re.search(rf"\b{re.escape(str(k))}\b", msg)), None)
        ctx.fail(msg, path + ((bad,) if bad else ()))


def _scenario(data, ctx: _Ctx, path: tuple) -> Scenario:
    if isinstance(data, dict) and "profile" in data:
        prof = _section(Profile, data["profile"], ctx, path + ("profile",))
        data = dict(data, profile=prof)
    for key in ("epsilon", "dr", "cfl", "t_end", "output_every", "c1", "r_max"):
        v = (data or {}).get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            ctx.fail(f"scenario field {key!r} must be a number, got {v!r}", path + (key,))
    return _section(Scenario, data, ctx, path)


def _tuples(kwargs: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in kwargs.items()}


def _run_config(data, ctx: _Ctx, path: tuple = ()) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        ctx.fail("run config must be a mapping", path)
    known = {"scenario", "eikonal", "diagnostics", "output"}
    for key in data:
        if key not in known:
            ctx.fail(f"unknown section {key!r}", path + (key,))
    sc = _scenario(data.get("scenario"), ctx, path + ("scenario",))
    eik = _section(EikonalConfig, data.get("eikonal"), ctx, path + ("eikonal",))
    diag = _section(DiagnosticsConfig, data.get("diagnostics"), ctx, path + ("diagnostics",), _tuples)
    out = _section(OutputConfig, data.get("output"), ctx, path + ("output",))
    dpath = path + ("diagnostics",)
    for i, name in enumerate(diag.inequalities):
        if name not in INEQUALITY_IDS:
            ctx.fail(f"unknown inequality id {name!r}; choose from {INEQUALITY_IDS}", dpath + ("inequalities", i))
    for i, name in enumerate(diag.fits):
        if name not in DECAY_QUANTITIES:
            ctx.fail(f"unknown fit quantity {name!r}; choose from {DECAY_QUANTITIES}", dpath + ("fits", i))
    if diag.kappa < 0 or diag.nu_prime < 0:
        ctx.fail("diagnostics fields 'kappa' and 'nu_prime' must be non-negative", dpath)
    if not eik.enabled and any(n in ("energy_weighted", "poincare") for n in diag.inequalities):
        ctx.fail("weighted inequalities need eikonal.enabled: true", dpath + ("inequalities",))
    if out.snapshot_stride < 1 or out.r_stride < 1:
        ctx.fail("output strides must be >= 1", path + ("output",))
    return RunConfig(sc, eik, diag, out)


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    data, ctx = _load(text, source)
    return _run_config(data, ctx)


def parse_sweep_config(text: str, source: str = "<config>") -> SweepConfig:
    data, ctx = _load(text, source)
    if not isinstance(data, dict):
        ctx.fail("sweep config must be a mapping", ())
    for key in data:
        if key not in ("base", "epsilons", "parallel"):
            ctx.fail(f"unknown sweep field {key!r}", (key,))
    base = _run_config(data.get("base"), ctx, ("base",))
    eps = data.get("epsilons")
    if not isinstance(eps, list):
        ctx.fail("sweep field 'epsilons' must be a list", ("epsilons",))
    try:
        return SweepConfig(base, tuple(float(e) for e in eps), int(data.get("parallel", 1)))
    except (TypeError, ValueError) as exc:
        key = "parallel" if "parallel" in str(exc) else "epsilons"
        ctx.fail(str(exc), (key,))


def load_run_config(path: str | Path) -> RunConfig:
    p = Path(path)
    return parse_run_config(p.read_text(), str(p))


def load_sweep_config(path: str | Path) -> SweepConfig:
    p = Path(path)
    return parse_sweep_config(p.read_text(), str(p))
