"""Measured versions of the decay, energy and Sobolev-type inequalities.

Everything is radial: ``dx = 4 pi r^2 dr``, integrals use the trapezoid rule
over finite samples, and sup norms run over the valid grid mask.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import cumulative_trapezoid

from .eikonal import EikonalFields, hll_fields
from .radial_solver import (
    NonlinearityKind,
    RadialSnapshot,
    Scenario,
    Trajectory,
    H_components,
    evolve_window,
    radial_derivative,
    phi_from_Phi,
    speed_squared,
)
from .reports import InequalityReport, min_constant
from .vectorfields import (
    ALPHABET,
    PARTIALS,
    GridField2D,
    VectorFieldId,
    WordCache,
    words,
    words_up_to,
)

FOUR_PI = 4.0 * math.pi


class InvariantViolation(ValueError):
    pass


def radial_integral(f: np.ndarray, r: np.ndarray) -> float:
    """``4 pi int f r^2 dr`` with NaN samples treated as zero."""
    g = np.where(np.isfinite(f), f, 0.0) * r * r
    return FOUR_PI * float(np.trapezoid(g, r))


def radial_l2(f: np.ndarray, r: np.ndarray) -> float:
    return math.sqrt(radial_integral(f * f, r))


# --- weight -----------------------------------------------------------------------

@dataclass
class WeightField:
    t: float
    w: np.ndarray
    sigma: float
    kappa: float
    epsilon: float
    nu_prime: float


def weight_field(t: float, rho: np.ndarray, kappa: float, epsilon: float, nu_prime: float,
                 phi: np.ndarray | None = None, dr: float | None = None) -> WeightField:
    """``w = exp(sigma |rho - 2|^{-nu'})`` with ``sigma = kappa eps ln(1 + t)``.

    ``rho`` is clamped to ``1`` before evaluation.  When ``phi`` is given, a
    non-negligible value (above ``1e-3 max|phi|``) at ``rho > 1 + 10 dr``
    raises ``InvariantViolation``; the slack absorbs the numerical tail that
    a second-order scheme leaves just ahead of the front.
    """
    if kappa < 0 or nu_prime < 0:
        raise ValueError("kappa and nu_prime must be non-negative")
    rho = np.asarray(rho, dtype=float)
    if phi is not None:
        slack = 10.0 * (dr if dr is not None else 0.0)
        amp = float(np.max(np.abs(phi))) if np.size(phi) else 0.0
        bad = (rho > 1.0 + slack) & (np.abs(phi) > 1e-3 * amp) & (amp > 0)
        if np.any(bad):
            raise InvariantViolation(f"rho > 1 on the support of phi at t = {t!r}")
    sigma = kappa * epsilon * math.log1p(t)
    V = np.abs(np.minimum(rho, 1.0) - 2.0) ** (-nu_prime)
    return WeightField(t=t, w=np.exp(sigma * V), sigma=sigma, kappa=kappa, epsilon=epsilon, nu_prime=nu_prime)


def unit_weight(n: int) -> np.ndarray:
    return np.ones(n)


# --- energies -------------------------------------------------------------------

def energy_levels(k: int, i: int) -> int:
    return 2 * (1 + k + i) + 1


def energy(supplier, weight: np.ndarray | None, k: int, i: int, cache: WordCache | None = None) -> float:
    """``E_{k,i} = sum_{|a|<=k, |I|<=i} int |d d^a Z^I phi|^2 w dx``.

    ``d^a`` runs over ordered words in ``(Dt, Dr)`` and ``Z^I`` over ordered
    words in ``(S, K, Dt, Dr)``.
    """
    if k < 0 or i < 0 or k + i > 3:
        raise ValueError("need 0 <= k, i and k + i <= 3")
    if cache is None:
        f = supplier(energy_levels(k, i)) if callable(supplier) else supplier
        cache = WordCache(f)
    f = cache.base
    w = np.ones(f.values.shape[1]) if weight is None else np.asarray(weight)
    dens = np.zeros(f.values.shape[1])
    for a in words_up_to(k, PARTIALS):
        for I in words_up_to(i):
            base = tuple(a) + tuple(I)
            gt = cache((VectorFieldId.Dt,) + base).center
            gr = cache((VectorFieldId.Dr,) + base).center
            dens = dens + gt * gt + gr * gr
    return radial_integral(dens * w, f.r)


@dataclass
class EnergyRecord:
    t: float
    E: dict
    E_N: dict

    def to_dict(self) -> dict:
        return {"t": self.t, "E": {f"{k},{i}": v for (k, i), v in sorted(self.E.items())},
                "E_N": {str(n): v for n, v in sorted(self.E_N.items())}}


def energy_record(supplier, weight: np.ndarray | None, max_order: int = 3) -> EnergyRecord:
    """All ``E_{k,i}`` with ``k + i <= max_order`` and unweighted ``E_N = E_{0,N}``."""
    f = supplier(energy_levels(0, max_order)) if callable(supplier) else supplier
    cache = WordCache(f)
    E = {(k, i): energy(None, weight, k, i, cache) for k in range(max_order + 1) for i in range(max_order + 1 - k)}
    EN = {n: energy(None, None, 0, n, cache) for n in range(max_order + 1)}
    return EnergyRecord(t=f.t_center, E=E, E_N=EN)


def snapshot_energy(snap: RadialSnapshot, weight: np.ndarray | None = None) -> float:
    """``int (phi_t^2 + phi_r^2) w dx`` from the stored snapshot derivatives."""
    dens = snap.dphi_dt**2 + snap.dphi_dr**2
    if weight is not None:
        dens = dens * weight
    return radial_integral(dens, snap.r)


# --- wave operator residual -----------------------------------------------------

def box_g_residual(sc: Scenario, snap: RadialSnapshot, h: float | None = None) -> np.ndarray:
    """Discrete ``box_g phi`` at the snapshot from a three-level window.

    Uses ``r box_g phi = -(1 - H00) Phi_tt + (1 + Hs) Phi_rr`` for the
    quasilinear cases and ``r(-phi_tt + Laplacian phi)`` otherwise; values at
    the two end points are NaN.
    """
    win = evolve_window(sc, snap, 3, h)
    r = win.r
    Phi = win.values * r[None, :]
    Ptt = (Phi[2] - 2 * Phi[1] + Phi[0]) / win.dt**2
    Prr = np.full_like(r, np.nan)
    Prr[1:-1] = (Phi[1, 2:] - 2 * Phi[1, 1:-1] + Phi[1, :-2]) / win.dr**2
    if sc.kind in (NonlinearityKind.MODEL, NonlinearityKind.GENERAL):
        H00, Hs = H_components(sc, win.values[1])
    else:
        H00 = Hs = np.zeros_like(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (-(1.0 - H00) * Ptt + (1.0 + Hs) * Prr) / r
    out[0] = np.nan
    out[-1] = np.nan
    return out


@dataclass
class Hypotheses:
    max_abs_H: float
    c1_measured: float
    rho_t_negative: bool
    slope_condition: bool
    slope_worst: float

    @property
    def all_hold(self) -> bool:
        return self.max_abs_H <= 0.5 and self.rho_t_negative and self.slope_condition

    def to_dict(self) -> dict:
        return dict(self.__dict__, all_hold=self.all_hold)


def energy_hypotheses(traj: Trajectory, fields: EikonalFields, kappa: float, epsilon: float,
                      nu_prime: float) -> Hypotheses:
    """Evaluate the smallness, ``rho_t < 0`` and ``rho``-slope hypotheses on the stored grid."""
    sc = traj.scenario
    phi = traj.stack("phi")
    H00, Hs = H_components(sc, phi)
    a1, a2, b1, b2 = sc.metric_coefficients()
    grad = np.hypot(traj.stack("dphi_dt"), traj.stack("dphi_dr"))
    dg = np.maximum(np.abs(a1 + 2 * a2 * phi), np.abs(b1 + 2 * b2 * phi)) * grad
    T = fields.times[:, None]
    c1 = float(np.max(dg * (1.0 + T)) / epsilon)
    HLL = H00 + Hs
    rq = fields.rho_q_factor
    rho_t = -(1.0 + 0.25 * HLL) * rq
    quad = rq**2 * (0.5 * HLL * (H00 - Hs) + HLL**3 / 16.0)
    lhs = quad / (rho_t * (1.0 + np.abs(fields.rho)) ** (1.0 + nu_prime))
    with np.errstate(divide="ignore"):
        bound = -(1.0 / (kappa * nu_prime)) / ((1.0 + T) * np.log1p(T)) if kappa * nu_prime > 0 else -np.inf
    later = np.broadcast_to(T > 0, lhs.shape) & fields.valid
    diff = (lhs - bound)[later]
    worst = float(np.min(diff)) if diff.size else 0.0
    return Hypotheses(
        max_abs_H=float(np.max(np.maximum(np.abs(H00), np.abs(Hs)))),
        c1_measured=c1,
        rho_t_negative=bool(np.all(rho_t[fields.valid] < 0)),
        slope_condition=bool(worst >= 0),
        slope_worst=worst,
    )


def energy_inequality_check(traj: Trajectory, fields: EikonalFields, kappa: float, epsilon: float,
                            nu_prime: float, c1: float | None = None, residual_stride: int = 1,
                            t_max: float | None = None) -> InequalityReport:
    """Weighted energy inequality with ``c = c1 + kappa`` at every stored time.

    LHS ``int |d phi|^2 w dx``; RHS
    ``4 E_w(0) + int_0^t 4 c eps/(1+tau) E_w(tau) dtau + 4/(c eps) int_0^t (1+tau) int |box_g phi|^2 w dx dtau``.
    Time integrals use the trapezoid rule over the stored snapshots.
    """
    hyp = energy_hypotheses(traj, fields, kappa, epsilon, nu_prime)
    if c1 is None:
        c1 = hyp.c1_measured
    c = c1 + kappa
    sc = traj.scenario
    idx = [k for k, s in enumerate(traj.snapshots) if t_max is None or s.t <= t_max + 1e-12]
    times = np.array([traj.snapshots[k].t for k in idx])
    Ew = np.empty(len(idx))
    R = np.zeros(len(idx))
    for n, k in enumerate(idx):
        snap = traj.snapshots[k]
        w = weight_field(snap.t, fields.rho[k], kappa, epsilon, nu_prime).w
        Ew[n] = snapshot_energy(snap, w)
        if n % residual_stride == 0 or n == len(idx) - 1:
            box = box_g_residual(sc, snap)
            R[n] = (1.0 + snap.t) * radial_integral(box * box * w, snap.r)
    if residual_stride > 1:
        have = np.array([n % residual_stride == 0 or n == len(idx) - 1 for n in range(len(idx))])
        R = np.interp(times, times[have], R[have])
    ce = c * epsilon
    grow = cumulative_trapezoid(4.0 * ce / (1.0 + times) * Ew, times, initial=0.0)
    forcing = cumulative_trapezoid(R, times, initial=0.0) * (4.0 / ce if ce > 0 else 0.0)
    rhs = 4.0 * Ew[0] + grow + forcing
    C, _ = min_constant(Ew, rhs)
    return InequalityReport(
        "energy_weighted", times, Ew, rhs, C,
        flags={"hypotheses_hold": hyp.all_hold},
        extra={"c": c, "c1": c1, "kappa": kappa, "nu_prime": nu_prime, "hypotheses": hyp.to_dict(),
               "forcing_term": forcing[-1]},
    )


# --- Poincare -------------------------------------------------------------------

POINCARE_CONSTANT = 32.0


def poincare_terms(t: float, r: np.ndarray, phi: np.ndarray, grad_sq: np.ndarray, rho: np.ndarray,
                   drho_dr: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    lhs = radial_integral((phi / (1.0 + np.abs(rho)) * drho_dr) ** 2 * w, r) + radial_integral(
        (phi / (1.0 + np.abs(r - t))) ** 2 * w, r
    )
    return lhs, POINCARE_CONSTANT * radial_integral(grad_sq * w, r)


def poincare_check(traj: Trajectory, fields: EikonalFields | None, kappa: float = 0.0, epsilon: float = 0.0,
                   nu_prime: float = 0.5, c2: float | None = None) -> InequalityReport:
    """``int (phi/(1+|rho|) d_r rho)^2 w + int (phi/(1+|r-t|))^2 w <= 32 int |d phi|^2 w``.

    With ``fields=None`` the flat eikonal ``rho = r - t`` is used.
    """
    times, lhs, rhs = [], [], []
    for k, snap in enumerate(traj.snapshots):
        r = snap.r
        if fields is None:
            rho, drr = r - snap.t, np.ones_like(r)
        else:
            rho, drr = fields.rho[k], fields.drho_dr(k)
        w = weight_field(snap.t, rho, kappa, epsilon, nu_prime).w
        a, b = poincare_terms(snap.t, r, snap.phi, snap.dphi_dt**2 + snap.dphi_dr**2, rho, drr, w)
        times.append(snap.t)
        lhs.append(a)
        rhs.append(b)
    C, _ = min_constant(np.array(lhs), np.array(rhs) / POINCARE_CONSTANT)
    flags = {}
    if c2 is not None and nu_prime > 0:
        flags["kappa_hypothesis"] = bool(kappa > 2.0 * c2 / nu_prime)
    return InequalityReport("poincare", times, lhs, rhs, C, flags=flags)


# --- Klainerman-Sobolev -----------------------------------------------------------

KS_WORDS = words_up_to(2)


def klainerman_sobolev_constant(f: GridField2D) -> tuple[float, float, float]:
    """``(C, sup LHS, sum of norms)`` for one window with at least 5 levels."""
    if f.n_levels < 5:
        raise ValueError("Klainerman-Sobolev needs a window with at least 5 time levels")
    cache = WordCache(f)
    r = f.r
    t = f.t_center
    norms = sum(radial_l2(cache(wd).center, r) for wd in KS_WORDS)
    lhs = (1.0 + t + r) * np.sqrt(1.0 + np.abs(t - r)) * np.abs(f.center)
    sup = float(np.max(lhs))
    if norms == 0.0:
        return (0.0 if sup == 0.0 else math.inf), sup, 0.0
    return sup / norms, sup, norms


def klainerman_sobolev_check(windows: Sequence[GridField2D]) -> InequalityReport:
    times, lhs, rhs, Cs = [], [], [], []
    for f in windows:
        C, sup, norms = klainerman_sobolev_constant(f)
        times.append(f.t_center)
        lhs.append(sup)
        rhs.append(norms)
        Cs.append(C)
    C = float(max(Cs))
    return InequalityReport("klainerman_sobolev", times, lhs, C * np.array(rhs), C, extra={"C_t": np.array(Cs)})


# --- Hormander ------------------------------------------------------------------

_t, _r = sp.symbols("t r", real=True)


@dataclass(frozen=True)
class SpaceTimeBump:
    """``F = amp (1 - ((t - t0)/a)^2)^4 (1 - (r/R)^2)^4`` on its support, zero elsewhere."""

    amp: float = 1.0
    t0: float = 1.0
    a: float = 0.8
    R: float = 1.0

    def expr(self):
        return self.amp * (1 - ((_t - self.t0) / self.a) ** 2) ** 4 * (1 - (_r / self.R) ** 2) ** 4

    def support(self, t, r):
        return (np.abs(t - self.t0) < self.a) & (np.abs(r) < self.R)

    def shifted(self, dt: float) -> "SpaceTimeBump":
        return SpaceTimeBump(self.amp, self.t0 + dt, self.a, self.R)


_SYM_FIELD = {
    VectorFieldId.S: lambda e: _t * sp.diff(e, _t) + _r * sp.diff(e, _r),
    VectorFieldId.K: lambda e: _r * sp.diff(e, _t) + _t * sp.diff(e, _r),
    VectorFieldId.Dt: lambda e: sp.diff(e, _t),
    VectorFieldId.Dr: lambda e: sp.diff(e, _r),
}


def z_applied(F: SpaceTimeBump, word) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Closed-form ``Z^I F`` (rightmost letter first) as a vectorised function."""
    e = F.expr()
    for z in reversed(tuple(word)):
        e = _SYM_FIELD[VectorFieldId(z)](e)
    fn = sp.lambdify((_t, _r), sp.expand(e), "numpy")
    return lambda t, r: np.where(F.support(t, r), fn(t, r) * np.ones_like(t * r), 0.0)


def hormander_rhs(F: SpaceTimeBump, t_end: float, n_t: int = 400, n_r: int = 400) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative ``sum_{|I|<=2} int_0^t int |Z^I F|/(1+tau+|y|) dy dtau`` on a fine time grid."""
    lo, hi = max(0.0, F.t0 - F.a), min(t_end, F.t0 + F.a)
    tau = np.linspace(0.0, t_end, max(n_t, 2))
    if hi > lo:
        tau = np.unique(np.concatenate([tau, np.linspace(lo, hi, n_t)]))
    r = np.linspace(0.0, F.R, n_r)
    T, Rr = np.meshgrid(tau, r, indexing="ij")
    dens = np.zeros_like(T)
    for wd in KS_WORDS:
        dens += np.abs(z_applied(F, wd)(T, Rr))
    inner = FOUR_PI * np.trapezoid(dens / (1.0 + T + Rr) * Rr * Rr, r, axis=1)
    return tau, cumulative_trapezoid(inner, tau, initial=0.0)


def hormander_forcing(F: SpaceTimeBump) -> Callable[[float, np.ndarray], np.ndarray]:
    """Solver forcing for ``box w = F`` (``box = -d_t^2 + Laplacian``): ``Phi_tt`` gains ``-r F``."""
    fn = sp.lambdify((_t, _r), F.expr(), "numpy")

    def forcing(t, r):
        tt = np.full_like(r, t)
        return np.where(F.support(tt, r), -r * fn(tt, r), 0.0)

    return forcing


def initial_data_term(sc: Scenario, snap0: RadialSnapshot) -> float:
    """``sum_{|I|<=2} ||d Z^I phi(0)||_{L^2}`` from a window centred at ``t = 0``."""
    f = evolve_window(sc, snap0, 7)
    cache = WordCache(f)
    total = 0.0
    for wd in KS_WORDS:
        gt = cache((VectorFieldId.Dt,) + tuple(wd)).center
        gr = cache((VectorFieldId.Dr,) + tuple(wd)).center
        total += math.sqrt(radial_integral(gt * gt + gr * gr, f.r))
    return total


def hormander_check(traj: Trajectory, F: SpaceTimeBump | None, include_data_term: bool = False,
                    t_min: float = 0.0) -> InequalityReport:
    """``|w|(1+t+|x|) <= C sum_{|I|<=2} int_0^t int |Z^I box w| / (1+tau+|y|)``.

    ``traj`` must be a linear run forced by ``F``.  Non-zero data are refused
    unless ``include_data_term`` adds ``sum ||d Z^I phi(0)||``.
    """
    sc = traj.scenario
    s0 = traj.snapshots[0]
    has_data = bool(np.any(s0.Phi != 0) or np.any(s0.Pi != 0))
    if has_data and not include_data_term:
        raise ValueError("non-zero initial data: pass include_data_term=True")
    times = traj.times
    if F is None:
        rhs = np.zeros_like(times)
    else:
        tau, cum = hormander_rhs(F, float(times[-1]))
        rhs = np.interp(times, tau, cum)
    if include_data_term:
        rhs = rhs + initial_data_term(sc, s0)
    lhs = np.array([float(np.max(np.abs(s.phi) * (1.0 + s.t + s.r))) for s in traj.snapshots])
    keep = times >= t_min
    C, _ = min_constant(lhs[keep], rhs[keep])
    return InequalityReport("hormander", times[keep], lhs[keep], C * rhs[keep], C)


# --- fits -------------------------------------------------------------------------

@dataclass
class DecayFitReport:
    quantity: str
    window: tuple[float, float]
    constant: float
    exponent: float
    residual: float
    n_samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__, window=list(self.window))


def log_spaced_indices(times: np.ndarray, lo: float, hi: float, n: int = 40) -> np.ndarray:
    """Snapshot indices nearest to ``n`` log-spaced targets in ``[lo, hi]`` (deduplicated)."""
    sel = np.flatnonzero((times >= lo - 1e-12) & (times <= hi + 1e-12))
    if sel.size == 0:
        return sel
    targets = np.expm1(np.linspace(math.log1p(lo), math.log1p(hi), n))
    idx = sel[np.abs(times[sel][None, :] - targets[:, None]).argmin(axis=1)]
    return np.unique(idx)


def power_law_fit(t: np.ndarray, v: np.ndarray, quantity: str = "custom",
                  window: tuple[float, float] | None = None) -> DecayFitReport:
    """Least squares ``ln v = ln C + a ln(1+t)``; ``v`` identically zero gives ``(0, nan)``."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.size < 10:
        raise ValueError(f"decay fit needs at least 10 samples, got {t.size}")
    win = window if window is not None else (float(t.min()), float(t.max()))
    if np.all(v == 0):
        return DecayFitReport(quantity, win, 0.0, float("nan"), 0.0, int(t.size))
    if np.any(v <= 0):
        raise ValueError("power-law fit needs positive samples")
    x, y = np.log1p(t), np.log(v)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return DecayFitReport(quantity, win, float(np.exp(coef[0])), float(coef[1]), res, int(t.size))


DECAY_QUANTITIES = ("sup_phi", "sup_dphi", "sup_d2phi", "sup_Zphi", "sup_dphi_weighted", "sup_d2phi_over_rhoq")


def second_derivative_norm(snap: RadialSnapshot, sc: Scenario) -> np.ndarray:
    """``sqrt(phi_tt^2 + 2 phi_tr^2 + phi_rr^2)`` with ``phi_tt`` taken from the equation."""
    r = snap.r
    dr = snap.dr
    Prr = np.zeros_like(snap.Phi)
    Prr[1:-1] = (snap.Phi[2:] - 2 * snap.Phi[1:-1] + snap.Phi[:-2]) / dr**2
    phi = snap.phi
    c2 = speed_squared(sc, phi) if sc.kind in (NonlinearityKind.MODEL, NonlinearityKind.GENERAL) else 1.0
    phi_tt = phi_from_Phi(c2 * Prr, dr)
    if sc.kind is NonlinearityKind.SEMILINEAR:
        phi_tt = phi_tt - snap.dphi_dt**2
    phi_tr = radial_derivative(snap.dphi_dt, dr)
    phi_rr = radial_derivative(snap.dphi_dr, dr)
    phi_rr[0] = phi_rr[1]
    return np.sqrt(phi_tt**2 + 2 * phi_tr**2 + phi_rr**2)


def decay_series(traj: Trajectory, quantity: str, fields: EikonalFields | None = None,
                 near_cone_only: bool = False, nu: float = 0.9, indices=None) -> tuple[np.ndarray, np.ndarray]:
    if quantity not in DECAY_QUANTITIES:
        raise ValueError(f"unknown decay quantity {quantity!r}; choose from {DECAY_QUANTITIES}")
    sc = traj.scenario
    idx = range(len(traj.snapshots)) if indices is None else indices
    ts, vs = [], []
    for k in idx:
        s = traj.snapshots[k]
        r, t = s.r, s.t
        rho = fields.rho[k] if fields is not None else r - t
        mask = np.abs(rho) <= 5.0 if near_cone_only else np.ones_like(r, dtype=bool)
        if quantity == "sup_phi":
            v = np.abs(s.phi)
        elif quantity == "sup_dphi":
            v = s.grad_norm
        elif quantity == "sup_dphi_weighted":
            v = s.grad_norm * (1.0 + np.abs(rho)) ** nu
        elif quantity == "sup_Zphi":
            v = np.maximum(np.abs(t * s.dphi_dt + r * s.dphi_dr), np.abs(r * s.dphi_dt + t * s.dphi_dr))
        else:
            v = second_derivative_norm(s, sc)
            if quantity == "sup_d2phi_over_rhoq" and fields is not None:
                v = v / fields.rho_q_factor[k]
        ts.append(t)
        vs.append(float(np.max(v[mask])) if mask.any() else 0.0)
    return np.array(ts), np.array(vs)


def decay_fit(traj: Trajectory, quantity: str = "sup_dphi", window: tuple[float, float] | None = None,
              near_cone_only: bool = False, fields: EikonalFields | None = None, nu: float = 0.9,
              n_samples: int = 40) -> DecayFitReport:
    """Fit ``sup Q(t) ~ C (1+t)^a`` over ``window`` (default ``[t_end/10, t_end]``) on log-spaced samples."""
    times = traj.times
    lo, hi = window if window is not None else (float(times[-1]) / 10.0, float(times[-1]))
    idx = log_spaced_indices(times, lo, hi, n_samples)
    t, v = decay_series(traj, quantity, fields, near_cone_only, nu, indices=idx)
    return power_law_fit(t, v, quantity, (lo, hi))


@dataclass
class GrowthReport:
    gamma: float
    residual: float
    low_quality: bool
    n_samples: int
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def growth_exponent(times: np.ndarray, E: np.ndarray, E0: float | None = None,
                    window: tuple[float, float] | None = None, max_residual: float = 0.05) -> GrowthReport:
    """Fit ``E(t) = E(0) (1+t)^gamma`` by least squares through the origin in log variables.

    ``low_quality`` is set when the rms log residual exceeds ``max_residual``
    or when the samples do not span a decade in ``1 + t``.
    """
    times = np.asarray(times, dtype=float)
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ValueError("energies must be positive")
    if E0 is None:
        E0 = float(E[np.argmin(times)])
    if E0 <= 0:
        raise ValueError("energies must be positive")
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, E = times[keep], E[keep]
    keep = times > 0
    x = np.log1p(times[keep])
    y = np.log(E[keep] / E0)
    if x.size < 2:
        raise ValueError("growth fit needs positive times")
    gamma = float(np.dot(x, y) / np.dot(x, x))
    res = float(np.sqrt(np.mean((gamma * x - y) ** 2)))
    span = float((1.0 + times.max()) / (1.0 + times.min()))
    flags = {"few_samples": bool(x.size < 10), "short_span": bool(span < 10.0)}
    return GrowthReport(gamma, res, bool(res > max_residual or flags["few_samples"] or flags["short_span"]),
                        int(x.size), flags)


# --- Gronwall -------------------------------------------------------------------

def gronwall_oracle(E0: float, A: float, B: float, epsilon: float, t) -> np.ndarray:
    """``(4 E(0) + A)(1+t)^{2 B eps}``."""
    if A < 0 or B < 0:
        raise ValueError("A and B must be non-negative")
    return (4.0 * E0 + A) * (1.0 + np.asarray(t, dtype=float)) ** (2.0 * B * epsilon)


def gronwall_extremal(E0: float, A: float, B: float, epsilon: float, t) -> np.ndarray:
    """Largest ``E`` allowed by the integral hypothesis for ``t > 0``.

    ``G = (4 E(0) + A B eps ln(1+t)) (1+t)^{B eps}`` solves the hypothesis
    with equality; any ``E`` with ``E(0) = E0`` and ``E <= G`` satisfies it.
    """
    t = np.asarray(t, dtype=float)
    L = np.log1p(t)
    return (4.0 * E0 + A * B * epsilon * L) * np.exp(B * epsilon * L)


def gronwall_hypothesis_holds(t: np.ndarray, E: np.ndarray, A: float, B: float, epsilon: float,
                              rtol: float = 1e-9) -> bool:
    """Check ``E(t) <= 4E(0) + int_0^t B eps/(1+tau) (E + A (1+tau)^{B eps})`` on the samples.

    The integral is the trapezoid rule on the given grid, so samples must be
    dense enough for the caller's purpose.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    integrand = B * epsilon / (1.0 + t) * (E + A * (1.0 + t) ** (B * epsilon))
    rhs = 4.0 * E[0] + cumulative_trapezoid(integrand, t, initial=0.0)
    return bool(np.all(E <= rhs * (1.0 + rtol) + 1e-300))


def convexity_bound(a, b, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """``(a^nu b^{1-nu}, a + b)`` for ``a, b >= 0`` and ``0 <= nu <= 1``."""
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a**nu * b ** (1.0 - nu), a + b


def snapshot_windows(traj: Trajectory, indices: Sequence[int], n_levels: int = 5) -> list[GridField2D]:
    return [evolve_window(traj.scenario, traj.snapshots[k], n_levels) for k in indices]
