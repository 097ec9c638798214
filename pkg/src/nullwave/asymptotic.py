"""Hörmander's asymptotic system for quadratic nonlinearities.

For ``box phi = a_{ab} d^a phi d^b phi`` the radiation field ``Phi = r phi``
near the light cone obeys, in the slow time ``s = ln(p/2)``,

    d_s d_q Phi = 2 sum_{m<=n} A_mn(omega) d_q^m Phi d_q^n Phi,
    A_mn = 1/4 sum_{|a|=m, |b|=n} a_{ab} omegahat^a omegahat^b,  omegahat = (-1, omega).

The integrator advances ``V = d_q Phi``; ``Phi`` is recovered by integrating
``V`` from ``q_max`` where it vanishes.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .nullframe import normalize_direction

AXES = {"t": 0, "x": 1, "y": 2, "z": 3}
_LETTERS = "txyz"


class NonlinearitySyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    coefficient: float

    def __post_init__(self):
        a, b = tuple(self.alpha), tuple(self.beta)
        if len(a) > len(b):
            a, b = b, a
        if len(b) > 2:
            raise ValueError("derivative multi-indices are limited to order 2")
        if any(i not in (0, 1, 2, 3) for i in a + b):
            raise ValueError("multi-index entries must be in 0..3")
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def label(self) -> str:
        s = lambda idx: "".join(_LETTERS[i] for i in idx)  # noqa: E731
        return f"{s(self.alpha)},{s(self.beta)},{self.coefficient!r}"


@dataclass(frozen=True)
class QuadraticNonlinearity:
    terms: tuple[Term, ...] = ()

    def scaled(self, lam: float) -> "QuadraticNonlinearity":
        return QuadraticNonlinearity(tuple(Term(t.alpha, t.beta, lam * t.coefficient) for t in self.terms))

    def __add__(self, other: "QuadraticNonlinearity") -> "QuadraticNonlinearity":
        return QuadraticNonlinearity(self.terms + other.terms)


def _parse_index(s: str, lineno: int) -> list[tuple[int, ...]]:
    s = s.strip()
    out = []
    for part in s.split("+") if s else [""]:
        part = part.strip()
        if len(part) > 2 or any(c not in AXES for c in part):
            raise NonlinearitySyntaxError(
                f"line {lineno}: bad derivative string {part!r} (use up to two of t,x,y,z)"
            )
        out.append(tuple(AXES[c] for c in part))
    return out


def parse_nonlinearity(text: str) -> QuadraticNonlinearity:
    """Parse ``alpha,beta,coeff`` triples, one per line or separated by ``;``.

    ``alpha``/``beta`` are strings over ``t,x,y,z`` of length <= 2 (empty means
    no derivative); ``+`` inside a string expands into several terms sharing
    the coefficient, e.g. ``,xx+yy+zz,-2.0``.  ``#`` starts a comment.
    """
    terms: list[Term] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for chunk in line.split(";"):
            if not chunk.strip():
                continue
            parts = chunk.split(",")
            if len(parts) != 3:
                raise NonlinearitySyntaxError(f"line {lineno}: expected 'alpha,beta,coeff', got {chunk.strip()!r}")
            try:
                coeff = float(parts[2])
            except ValueError:
                raise NonlinearitySyntaxError(f"line {lineno}: coefficient {parts[2].strip()!r} is not a number")
            if not math.isfinite(coeff):
                raise NonlinearitySyntaxError(f"line {lineno}: coefficient must be finite")
            for a in _parse_index(parts[0], lineno):
                for b in _parse_index(parts[1], lineno):
                    terms.append(Term(a, b, coeff))
    return QuadraticNonlinearity(tuple(terms))


def semilinear_dt_squared() -> QuadraticNonlinearity:
    """``box phi = (d_t phi)^2``."""
    return parse_nonlinearity("t,t,1.0")


def null_form_q0() -> QuadraticNonlinearity:
    """``box phi = (d_t phi)^2 - |grad phi|^2``."""
    return parse_nonlinearity("t,t,1.0\nx,x,-1.0\ny,y,-1.0\nz,z,-1.0")


def model_family(c1: float) -> QuadraticNonlinearity:
    """Quadratic part of ``-phi_tt + c(phi)^2 lap phi = 0`` with ``c'(0) = c1``."""
    return parse_nonlinearity(f",xx+yy+zz,{-2.0 * c1!r}")


@dataclass(frozen=True)
class AsymptoticCoefficients:
    A: np.ndarray
    omega: np.ndarray

    def __getitem__(self, mn: tuple[int, int]) -> float:
        m, n = mn
        return float(self.A[min(m, n), max(m, n)])


def asymptotic_coefficients(nl: QuadraticNonlinearity, omega) -> AsymptoticCoefficients:
    w = normalize_direction(omega)
    what = np.array([-1.0, w[0], w[1], w[2]])
    A = np.zeros((3, 3))
    for term in nl.terms:
        m, n = len(term.alpha), len(term.beta)
        A[m, n] += 0.25 * term.coefficient * np.prod(what[list(term.alpha)]) * np.prod(what[list(term.beta)])
    return AsymptoticCoefficients(A=A, omega=w)


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` deterministic, roughly uniform unit vectors."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    theta = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])


def check_null_condition(nl: QuadraticNonlinearity, n_directions: int = 64) -> tuple[bool, float]:
    if n_directions < 6:
        raise ValueError("n_directions must be at least 6")
    worst = 0.0
    for w in fibonacci_sphere(n_directions):
        worst = max(worst, float(np.max(np.abs(asymptotic_coefficients(nl, w).A))))
    return worst < 1e-12, worst


# --- profiles -----------------------------------------------------------------

@dataclass
class AsymptoticProfile:
    q: np.ndarray
    Phi: np.ndarray
    V: np.ndarray
    s: float

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])


def phi_from_v(V: np.ndarray, dq: float) -> np.ndarray:
    """``Phi(q) = -int_q^{q_max} V``, trapezoid rule from the right end."""
    seg = 0.5 * (V[1:] + V[:-1]) * dq
    Phi = np.zeros_like(V)
    Phi[:-1] = -np.cumsum(seg[::-1])[::-1]
    return Phi


def make_profile(q: np.ndarray, V: np.ndarray, s0: float = 0.0) -> AsymptoticProfile:
    q = np.asarray(q, dtype=float)
    V = np.asarray(V, dtype=float)
    return AsymptoticProfile(q=q, Phi=phi_from_v(V, float(q[1] - q[0])), V=V, s=s0)


def q_grid(q_min: float = -3.0, q_max: float = 2.0, dq: float = 0.01) -> np.ndarray:
    n = int(round((q_max - q_min) / dq))
    return q_min + dq * np.arange(n + 1)


def _smoothstep(x: np.ndarray) -> np.ndarray:
    """C-infinity step from 0 (x<=0) to 1 (x>=1)."""
    x = np.asarray(x, dtype=float)
    f = lambda y: np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)  # noqa: E731
    a, b = f(x), f(1.0 - x)
    return a / (a + b)


def plateau_profile(q: np.ndarray, v0: float, plateau=(-1.0, 0.0), ramp: float = 0.5, s0: float = 0.0) -> AsymptoticProfile:
    """``V = v0`` on ``plateau``, smoothly ramped to zero over ``ramp`` on each side."""
    lo, hi = plateau
    if hi + ramp > 1.0:
        raise ValueError("profile must vanish for q >= 1")
    up = _smoothstep((q - (lo - ramp)) / ramp)
    down = _smoothstep(((hi + ramp) - q) / ramp)
    return make_profile(q, v0 * up * down, s0)


def bump_profile(q: np.ndarray, amplitude: float, s0: float = 0.0) -> AsymptoticProfile:
    """``Phi = amplitude (1 - q^2)^4`` on ``|q| < 1``; ``V`` is its exact derivative."""
    inside = np.abs(q) < 1.0
    V = np.where(inside, -8.0 * amplitude * q * (1.0 - q * q) ** 3, 0.0)
    return make_profile(q, V, s0)


# --- integration --------------------------------------------------------------

class Verdict(str, enum.Enum):
    COMPLETED = "completed"
    BLOWUP = "blowup"
    INCOMPLETE = "incomplete"  # step budget exhausted before s_max


@dataclass
class IntegrationOutcome:
    verdict: Verdict
    s_final: float
    s_star: float | None = None
    q_star: float | None = None
    flag: str | None = None
    history_s: np.ndarray = field(default_factory=lambda: np.empty(0))
    history_max_v: np.ndarray = field(default_factory=lambda: np.empty(0))
    n_steps: int = 0

    @property
    def blew_up(self) -> bool:
        return self.verdict is Verdict.BLOWUP


def _rhs(A: np.ndarray, V: np.ndarray, dq: float) -> tuple[np.ndarray, np.ndarray]:
    """Right side of ``d_s V`` and the transport speed multiplying ``d_q V``."""
    Phi = phi_from_v(V, dq)
    Vp = np.concatenate([[0.0], V, [0.0]])
    fwd = (Vp[2:] - Vp[1:-1]) / dq
    bwd = (Vp[1:-1] - Vp[:-2]) / dq
    cen = 0.5 * (fwd + bwd)
    b = 2.0 * (A[0, 2] * Phi + A[1, 2] * V)
    # d_s V = b d_q V + ...; information moves with dq/ds = -b, so b > 0 looks to larger q.
    Vq_up = np.where(b > 0, fwd, bwd)
    out = b * Vq_up + 2.0 * (A[0, 0] * Phi * Phi + A[0, 1] * Phi * V + A[1, 1] * V * V + A[2, 2] * cen * cen)
    return out, b


def integrate_asymptotic(
    A: AsymptoticCoefficients | np.ndarray,
    initial: AsymptoticProfile,
    s_max: float,
    blowup_threshold: float | None = None,
    ds: float = 0.01,
    cfl: float = 0.5,
    ds_min: float = 1e-8,
    checkpoints: Sequence[float] = (),
    max_steps: int = 200_000,
) -> tuple[list[AsymptoticProfile], IntegrationOutcome]:
    """Advance ``V = d_q Phi`` in slow time with the explicit midpoint rule.

    The step is ``ds`` reduced so that the relative change of ``V`` per step
    stays below ``ds`` and the upwind transport respects ``cfl``.  A step whose
    midpoint violates the CFL bound is rejected and halved; falling below
    ``ds_min`` ends the run as a blow-up flagged ``stiffness``.  Blow-up is also
    declared once ``max |V|`` exceeds ``blowup_threshold`` (default ``1e6``
    times the initial ``max |V|``).  Running out of ``max_steps`` first gives
    the verdict ``incomplete``.
    """
    Amat = A.A if isinstance(A, AsymptoticCoefficients) else np.asarray(A, dtype=float)
    q = initial.q
    dq = initial.dq
    V = initial.V.astype(float).copy()
    s = float(initial.s)
    if s_max <= s:
        raise ValueError("s_max must exceed the initial slow time")
    v_init = float(np.max(np.abs(V)))
    if blowup_threshold is None:
        blowup_threshold = 1e6 * max(v_init, 1e-300)
    pending = sorted(c for c in checkpoints if s < c <= s_max)
    profiles: list[AsymptoticProfile] = []
    hist_s, hist_v = [s], [v_init]
    n = 0
    while s < s_max and n < max_steps:
        k1, b1 = _rhs(Amat, V, dq)
        vmax = max(float(np.max(np.abs(V))), 1e-300)
        rate = float(np.max(np.abs(k1))) / vmax
        h = ds / max(1.0, rate)
        bmax = float(np.max(np.abs(b1)))
        if bmax > 0:
            h = min(h, cfl * dq / bmax)
        target = pending[0] if pending else s_max
        h = min(h, target - s)
        while True:
            if h < ds_min and target - s >= ds_min:
                q_star = float(q[int(np.argmax(np.abs(V)))])
                return profiles, IntegrationOutcome(
                    Verdict.BLOWUP, s, s_star=s, q_star=q_star, flag="stiffness",
                    history_s=np.array(hist_s), history_max_v=np.array(hist_v), n_steps=n,
                )
            Vmid = V + 0.5 * h * k1
            k2, b2 = _rhs(Amat, Vmid, dq)
            if float(np.max(np.abs(b2))) * h > cfl * dq * (1 + 1e-12):
                h *= 0.5
                continue
            break
        V = V + h * k2
        s = target if h == target - s else s + h
        n += 1
        vmax = float(np.max(np.abs(V)))
        hist_s.append(s)
        hist_v.append(vmax)
        if not np.all(np.isfinite(V)) or vmax > blowup_threshold:
            q_star = float(q[int(np.nanargmax(np.abs(V)))])
            return profiles, IntegrationOutcome(
                Verdict.BLOWUP, s, s_star=s, q_star=q_star, flag="threshold",
                history_s=np.array(hist_s), history_max_v=np.array(hist_v), n_steps=n,
            )
        if pending and s >= pending[0]:
            profiles.append(AsymptoticProfile(q=q, Phi=phi_from_v(V, dq), V=V.copy(), s=s))
            pending.pop(0)
    verdict = Verdict.COMPLETED if s >= s_max else Verdict.INCOMPLETE
    return profiles, IntegrationOutcome(
        verdict, s, flag=None if verdict is Verdict.COMPLETED else "step_budget",
        history_s=np.array(hist_s), history_max_v=np.array(hist_v), n_steps=n,
    )


def riccati_blowup_oracle(A11: float, V0_max: float, s0: float = 0.0) -> float:
    """Exact blow-up slow time of ``dV/ds = 2 A11 V^2``; ``inf`` if it never blows up."""
    prod = A11 * V0_max
    if not prod > 0:
        return math.inf
    return s0 + 1.0 / (2.0 * prod)


# --- classification -----------------------------------------------------------

class Kind(str, enum.Enum):
    CLASSICAL_NULL = "ClassicalNull"
    WEAK_NULL_EVIDENCE = "WeakNullEvidence"
    BLOWUP = "BlowUp"


@dataclass(frozen=True)
class ClassifyParams:
    s_max: float = 40.0
    amplitude: float = 0.1
    n_directions: int = 32
    blowup_factor: float = 1e3
    ds: float = 0.01
    q_min: float = -3.0
    q_max: float = 2.0
    dq: float = 0.01
    growth_tolerance: float = 0.05


@dataclass
class Classification:
    kind: Kind
    max_abs_A: float
    growth_exponent: float | None = None
    s_star: float | None = None
    q_star: float | None = None
    oracle_s_star: float | None = None
    omega: tuple[float, float, float] | None = None
    accepted: bool | None = None
    complete: bool = True

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "max_abs_A": self.max_abs_A}
        if self.kind is Kind.WEAK_NULL_EVIDENCE:
            d.update(growth_exponent=self.growth_exponent, accepted=self.accepted, complete=self.complete)
        if self.kind is Kind.BLOWUP:
            d.update(s_star=self.s_star, q_star=self.q_star, oracle_s_star=self.oracle_s_star,
                     omega=list(self.omega) if self.omega is not None else None)
        return d


def growth_exponent_in_s(s: np.ndarray, vmax: np.ndarray) -> float:
    """Least-squares slope of ``ln max|V|`` against ``s`` over the second half of the run."""
    s = np.asarray(s)
    keep = s >= s[0] + 0.5 * (s[-1] - s[0])
    y = np.log(np.maximum(vmax[keep], 1e-300))
    if keep.sum() < 2:
        return 0.0
    return float(np.polyfit(s[keep], y, 1)[0])


def classify(nl: QuadraticNonlinearity, params: ClassifyParams = ClassifyParams()) -> Classification:
    is_null, worst = check_null_condition(nl, params.n_directions)
    if is_null:
        return Classification(Kind.CLASSICAL_NULL, worst)
    q = q_grid(params.q_min, params.q_max, params.dq)
    init = bump_profile(q, params.amplitude)
    seen: dict[bytes, tuple[IntegrationOutcome, AsymptoticCoefficients]] = {}
    growth = []
    complete = True
    for w in fibonacci_sphere(params.n_directions):
        coeffs = asymptotic_coefficients(nl, w)
        key = np.round(coeffs.A, 12).tobytes()
        if key not in seen:
            _, out = integrate_asymptotic(
                coeffs, init, params.s_max,
                blowup_threshold=params.blowup_factor * float(np.max(np.abs(init.V))), ds=params.ds,
            )
            seen[key] = (out, coeffs)
        out, _ = seen[key]
        if out.blew_up:
            a11 = coeffs.A[1, 1]
            v_ext = float(np.max(init.V)) if a11 > 0 else float(np.min(init.V))
            return Classification(
                Kind.BLOWUP, worst, s_star=out.s_star, q_star=out.q_star,
                oracle_s_star=riccati_blowup_oracle(a11, v_ext, init.s), omega=tuple(float(x) for x in w),
            )
        complete &= out.verdict is Verdict.COMPLETED
        growth.append(growth_exponent_in_s(out.history_s, out.history_max_v))
    g = float(max(growth))
    return Classification(Kind.WEAK_NULL_EVIDENCE, worst, growth_exponent=g,
                          accepted=complete and g <= params.growth_tolerance, complete=complete)
