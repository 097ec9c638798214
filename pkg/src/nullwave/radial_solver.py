"""Radially symmetric quasilinear wave evolution through ``Phi = r phi``.

Every supported nonlinearity is rotation invariant, so the metric has the
form ``g^{00} = -1 + H00(phi)``, ``g^{ij} = (1 + Hs(phi)) delta^{ij}`` with no
mixed components.  With ``Phi = r phi`` the equation ``g^{ab} d_a d_b phi = 0``
becomes exactly

    Phi_tt = c_eff(phi)^2 Phi_rr,    c_eff^2 = (1 + Hs) / (1 - H00),

and ``box phi = (d_t phi)^2`` becomes ``Phi_tt = Phi_rr - Pi^2 / r`` with
``Pi = Phi_t``.  Time stepping is kick-drift-kick leapfrog on a uniform grid
``r_j = j dr`` with ``Phi(0) = 0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .vectorfields import GridField2D

# --- data profiles --------------------------------------------------------------


def _f(x):
    return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def _df(x):
    xs = np.where(x > 0, x, 1.0)
    return np.where(x > 0, np.exp(-1.0 / xs) / xs**2, 0.0)


def smooth_step(x):
    """C-infinity transition from 0 (x <= 0) to 1 (x >= 1) and its derivative."""
    x = np.asarray(x, dtype=float)
    a, b = _f(x), _f(1.0 - x)
    da, db = _df(x), -_df(1.0 - x)
    s = a + b
    return a / s, (da * s - a * (da + db)) / (s * s)


PROFILE_KINDS = ("bump", "gaussian", "shell", "none")


@dataclass(frozen=True)
class Profile:
    """Unit-amplitude radial data shape supported in ``r <= 1``.

    ``bump``:     ``(1 - (r/radius)^2)^4``
    ``gaussian``: ``exp(-r^2/width^2)`` times a smooth cutoff switching off on ``[cutoff, radius]``
    ``shell``:    ``(1 - ((r - center)/width)^2)^4`` on ``|r - center| < width``
    ``none``:     identically zero (for purely forced runs)
    """

    kind: str = "bump"
    radius: float = 1.0
    width: float = 0.4
    center: float = 0.5
    cutoff: float = 0.6

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"profile.kind must be one of {PROFILE_KINDS}, got {self.kind!r}")
        if not (0 < self.radius <= 1.0):
            raise ValueError("profile.radius must lie in (0, 1]")
        if self.kind == "gaussian" and not (0 < self.cutoff < self.radius and self.width > 0):
            raise ValueError("gaussian profile needs 0 < cutoff < radius and width > 0")
        if self.kind == "shell" and not (0 < self.center - self.width and self.center + self.width <= 1.0):
            raise ValueError("shell profile must satisfy 0 < center - width and center + width <= 1")

    def value_and_slope(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "none":
            return np.zeros_like(r), np.zeros_like(r)
        if self.kind == "bump":
            x = r / self.radius
            inside = x < 1.0
            u = np.where(inside, 1.0 - x * x, 0.0)
            return u**4, np.where(inside, -8.0 * x * u**3 / self.radius, 0.0)
        if self.kind == "shell":
            x = (r - self.center) / self.width
            inside = np.abs(x) < 1.0
            u = np.where(inside, 1.0 - x * x, 0.0)
            return u**4, np.where(inside, -8.0 * x * u**3 / self.width, 0.0)
        g = np.exp(-(r * r) / self.width**2)
        dg = -2.0 * r / self.width**2 * g
        span = self.radius - self.cutoff
        chi, dchi = smooth_step((self.radius - r) / span)
        return g * chi, dg * chi - g * dchi / span

    def __call__(self, r) -> np.ndarray:
        return self.value_and_slope(r)[0]


# --- scenarios ------------------------------------------------------------------

class NonlinearityKind(str, enum.Enum):
    MODEL = "model"
    GENERAL = "general"
    SEMILINEAR = "semilinear"
    LINEAR = "linear"


VELOCITY_KINDS = ("zero", "outgoing")


@dataclass(frozen=True)
class Scenario:
    """One Cauchy problem.

    The data are ``phi_0 = polarity * epsilon * profile``.
    ``velocity`` is ``zero`` (``phi_1 = 0``) or ``outgoing`` (``phi_1 = -(r phi_0)'/r``,
    so that the linear solution is a pure outgoing wave).  For ``general``
    the metric perturbation is ``H00 = k00 phi + k2_00 phi^2`` and
    ``Hs = ks phi + k2_s phi^2``.
    """

    nonlinearity: str = "model"
    epsilon: float = 0.01
    c1: float = 1.0
    k00: float = 0.0
    ks: float = 0.0
    k2_00: float = 0.0
    k2_s: float = 0.0
    profile: Profile = field(default_factory=Profile)
    velocity: str = "zero"
    polarity: float = 1.0
    dr: float = 0.05
    r_max: float | None = None
    cfl: float = 0.45
    t_end: float = 10.0
    output_every: float = 0.25
    blowup_factor: float = 1e3
    dt_min: float = 1e-7
    max_H: float = 0.25

    def __post_init__(self):
        NonlinearityKind(self.nonlinearity)
        checks = {
            "epsilon": self.epsilon > 0,
            "dr": self.dr > 0,
            "cfl": 0 < self.cfl < 1,
            "t_end": self.t_end > 0,
            "output_every": self.output_every > 0,
            "blowup_factor": self.blowup_factor > 0,
            "dt_min": self.dt_min > 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"scenario field {name!r} is out of range: {getattr(self, name)!r}")
        if self.polarity not in (1.0, -1.0):
            raise ValueError("scenario field 'polarity' must be +1 or -1")
        if self.velocity not in VELOCITY_KINDS:
            raise ValueError(f"scenario field 'velocity' must be one of {VELOCITY_KINDS}")
        if self.r_max is not None and self.r_max < self.t_end + 2:
            raise ValueError("scenario field 'r_max' must be at least t_end + 2")
        if isinstance(self.profile, dict):
            object.__setattr__(self, "profile", Profile(**self.profile))
        if self.velocity == "outgoing" and self.profile.kind not in ("shell", "none"):
            # phi_1 = -(P/r + P') is singular at r = 0 unless P vanishes near the origin
            raise ValueError("scenario field 'velocity': outgoing data need a profile vanishing near r = 0 (shell)")

    @property
    def kind(self) -> NonlinearityKind:
        return NonlinearityKind(self.nonlinearity)

    @property
    def outer_radius(self) -> float:
        return self.r_max if self.r_max is not None else self.t_end + 3.0

    def metric_coefficients(self) -> tuple[float, float, float, float]:
        """``(a1, a2, b1, b2)`` with ``H00 = a1 phi + a2 phi^2`` and ``Hs = b1 phi + b2 phi^2``."""
        k = self.kind
        if k is NonlinearityKind.MODEL:
            return 0.0, 0.0, 2.0 * self.c1, self.c1**2
        if k is NonlinearityKind.GENERAL:
            return self.k00, self.k2_00, self.ks, self.k2_s
        return 0.0, 0.0, 0.0, 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def H_components(sc: Scenario, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a1, a2, b1, b2 = sc.metric_coefficients()
    return a1 * phi + a2 * phi * phi, b1 * phi + b2 * phi * phi


def speed_squared(sc: Scenario, phi: np.ndarray) -> np.ndarray:
    H00, Hs = H_components(sc, phi)
    return (1.0 + Hs) / (1.0 - H00)


# --- snapshots and trajectories -------------------------------------------------

def phi_from_Phi(Phi: np.ndarray, dr: float) -> np.ndarray:
    """``Phi / r`` with the second-order one-sided limit ``(8 Phi_1 - Phi_2) / (6 dr)`` at ``r = 0``."""
    Phi = np.asarray(Phi)
    out = np.empty_like(Phi, dtype=float)
    r = dr * np.arange(Phi.shape[-1])
    out[..., 1:] = Phi[..., 1:] / r[1:]
    out[..., 0] = (8.0 * Phi[..., 1] - Phi[..., 2]) / (6.0 * dr)
    return out


def radial_derivative(phi: np.ndarray, dr: float) -> np.ndarray:
    """Centred ``d_r`` of an even function on ``r_j = j dr`` (zero at the origin)."""
    d = np.empty_like(phi)
    d[..., 1:-1] = (phi[..., 2:] - phi[..., :-2]) / (2.0 * dr)
    d[..., 0] = 0.0
    d[..., -1] = (phi[..., -1] - phi[..., -2]) / dr
    return d


@dataclass(frozen=True)
class RadialSnapshot:
    t: float
    dr: float
    Phi: np.ndarray
    Pi: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.Phi.size)

    @property
    def phi(self) -> np.ndarray:
        return phi_from_Phi(self.Phi, self.dr)

    @property
    def dphi_dt(self) -> np.ndarray:
        return phi_from_Phi(self.Pi, self.dr)

    @property
    def dphi_dr(self) -> np.ndarray:
        return radial_derivative(self.phi, self.dr)

    @property
    def dphi_dq(self) -> np.ndarray:
        return 0.5 * (self.dphi_dr - self.dphi_dt)

    @property
    def dphi_dp(self) -> np.ndarray:
        return 0.5 * (self.dphi_dr + self.dphi_dt)

    @property
    def grad_norm(self) -> np.ndarray:
        return np.maximum(np.abs(self.dphi_dt), np.abs(self.dphi_dr))


class Termination(str, enum.Enum):
    COMPLETED = "Completed"
    BLOWUP = "BlowUp"
    ERROR = "Error"


@dataclass
class Trajectory:
    scenario: Scenario
    snapshots: list[RadialSnapshot]
    termination: Termination
    t_star: float | None = None
    r_star: float | None = None
    diagnostic: dict = field(default_factory=dict)
    n_steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def r(self) -> np.ndarray:
        return self.snapshots[0].r

    @property
    def dr(self) -> float:
        return self.scenario.dr

    def stack(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.snapshots])


# --- time stepping --------------------------------------------------------------

class _NoRealRoot(ArithmeticError):
    pass


class _Stepper:
    def __init__(self, sc: Scenario, n: int):
        self.sc = sc
        self.dr = sc.dr
        self.r = sc.dr * np.arange(n)
        self.inv_r = np.zeros(n)
        self.inv_r[1:] = 1.0 / self.r[1:]
        self.semilinear = sc.kind is NonlinearityKind.SEMILINEAR
        self.quasilinear = sc.kind in (NonlinearityKind.MODEL, NonlinearityKind.GENERAL)
        self.forcing: Callable[[float, np.ndarray], np.ndarray] | None = None

    def d2(self, Phi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(Phi)
        out[1:-1] = (Phi[2:] - 2.0 * Phi[1:-1] + Phi[:-2]) / self.dr**2
        return out

    def c2(self, Phi: np.ndarray) -> np.ndarray | float:
        if not self.quasilinear:
            return 1.0
        return speed_squared(self.sc, Phi * self.inv_r)

    def max_speed(self, Phi: np.ndarray) -> float:
        if not self.quasilinear:
            return 1.0
        c2 = self.c2(Phi)
        if np.any(c2 <= 0):
            return math.inf
        return float(np.sqrt(np.max(c2)))

    def accel(self, t: float, Phi: np.ndarray, Pi: np.ndarray) -> np.ndarray:
        a = self.c2(Phi) * self.d2(Phi)
        if self.semilinear:
            a = a - Pi * Pi * self.inv_r
        if self.forcing is not None:
            a = a + self.forcing(t, self.r)
        a[0] = a[-1] = 0.0
        return a

    def step(self, t: float, Phi: np.ndarray, Pi: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
        Pi_half = Pi + 0.5 * h * self.accel(t, Phi, Pi)
        Phi_new = Phi + h * Pi_half
        Phi_new[0] = Phi_new[-1] = 0.0
        if not self.semilinear:
            Pi_new = Pi_half + 0.5 * h * self.accel(t + h, Phi_new, Pi_half)
        else:
            # Pi = b - (h/2) Pi^2 / r, solved in closed form for the root continuous at h = 0
            b = Pi_half + 0.5 * h * self.c2(Phi_new) * self.d2(Phi_new)
            if self.forcing is not None:
                b = b + 0.5 * h * self.forcing(t + h, self.r)
            disc = 1.0 + 2.0 * h * b * self.inv_r
            if np.any(disc < 0):
                raise _NoRealRoot(int(np.argmin(disc)))
            Pi_new = 2.0 * b / (1.0 + np.sqrt(disc))
        Pi_new[0] = Pi_new[-1] = 0.0
        return Phi_new, Pi_new


def initial_data(sc: Scenario) -> tuple[np.ndarray, np.ndarray, int]:
    n = int(math.ceil(sc.outer_radius / sc.dr)) + 1
    r = sc.dr * np.arange(n)
    p0, dp0 = sc.profile.value_and_slope(r)
    amp = sc.polarity * sc.epsilon
    Phi = amp * r * p0
    if sc.velocity == "outgoing":
        Pi = -amp * (p0 + r * dp0)
    else:
        Pi = np.zeros(n)
    Phi[0] = Phi[-1] = 0.0
    Pi[0] = Pi[-1] = 0.0
    return Phi, Pi, n


def _gradient_max(Phi: np.ndarray, Pi: np.ndarray, dr: float) -> tuple[float, int]:
    phi = phi_from_Phi(Phi, dr)
    g = np.maximum(np.abs(phi_from_Phi(Pi, dr)), np.abs(radial_derivative(phi, dr)))
    j = int(np.argmax(g))
    return float(g[j]), j


def run(sc: Scenario, forcing: Callable[[float, np.ndarray], np.ndarray] | None = None,
        keep_every: int = 1) -> Trajectory:
    """Evolve ``sc`` to ``t_end``, storing a snapshot every ``output_every``.

    ``forcing(t, r)`` optionally adds ``r F(t, r)`` to ``Phi_tt``, i.e. solves
    ``box phi = -F`` with the sign convention ``box = -d_t^2 + Laplacian``;
    callers pass ``F`` already multiplied by ``r``.
    """
    Phi, Pi, n = initial_data(sc)
    st = _Stepper(sc, n)
    st.forcing = forcing
    t = 0.0
    snaps = [RadialSnapshot(0.0, sc.dr, Phi.copy(), Pi.copy())]
    threshold = sc.blowup_factor * sc.epsilon
    n_out = int(math.floor(sc.t_end / sc.output_every + 1e-9))
    out_times = [sc.output_every * (k + 1) for k in range(n_out)]
    if not out_times or out_times[-1] < sc.t_end - 1e-12:
        out_times.append(sc.t_end)
    steps = 0
    last_dts: list[float] = []
    for k_out, t_next in enumerate(out_times):
        while t < t_next - 1e-12:
            speed = max(st.max_speed(Phi), 1.0)
            dt_cfl = sc.cfl * sc.dr / speed if math.isfinite(speed) else 0.0
            if dt_cfl < sc.dt_min:
                gmax, j = _gradient_max(Phi, Pi, sc.dr)
                return _blowup(sc, snaps, t, j, "dt_collapse", steps, gmax, last_dts)
            remaining = t_next - t
            h = remaining / math.ceil(remaining / dt_cfl - 1e-9)
            try:
                Phi_new, Pi_new = st.step(t, Phi, Pi, h)
            except _NoRealRoot as exc:
                return _blowup(sc, snaps, t + h, int(exc.args[0]), "no_real_root", steps, math.inf, last_dts)
            if not (np.all(np.isfinite(Phi_new)) and np.all(np.isfinite(Pi_new))):
                return Trajectory(sc, snaps, Termination.ERROR, diagnostic={"reason": "non-finite field", "t": t + h},
                                  n_steps=steps)
            Phi, Pi = Phi_new, Pi_new
            t = t_next if h == remaining else t + h
            steps += 1
            last_dts = (last_dts + [h])[-8:]
            gmax, j = _gradient_max(Phi, Pi, sc.dr)
            if gmax > threshold:
                return _blowup(sc, snaps, t, j, "gradient_threshold", steps, gmax, last_dts)
        if (k_out + 1) % keep_every == 0 or k_out == len(out_times) - 1:
            snaps.append(RadialSnapshot(t_next, sc.dr, Phi.copy(), Pi.copy()))
    return Trajectory(sc, snaps, Termination.COMPLETED, n_steps=steps)


def _blowup(sc, snaps, t, j, reason, steps, gmax, last_dts) -> Trajectory:
    diag = {"reason": reason, "max_gradient": gmax, "threshold": sc.blowup_factor * sc.epsilon,
            "last_dt": last_dts[-1] if last_dts else None, "t_last_good": snaps[-1].t}
    return Trajectory(sc, snaps, Termination.BLOWUP, t_star=float(t), r_star=float(j * sc.dr),
                      diagnostic=diag, n_steps=steps)


def detect_blowup(traj: Trajectory) -> tuple[float, float, dict] | None:
    if traj.termination is not Termination.BLOWUP:
        return None
    return traj.t_star, traj.r_star, dict(traj.diagnostic)


# --- windows for vector-field stencils ------------------------------------------

def evolve_window(sc: Scenario, snap: RadialSnapshot, n_levels: int, h: float | None = None,
                  forcing=None) -> GridField2D:
    """``phi`` on ``n_levels`` equally spaced times centred at ``snap.t``.

    The neighbouring levels are produced by re-evolving the stored state
    forward and backward with a fixed step ``h``.  The default ``h = dr``
    makes ``D_t + D_r`` annihilate lattice functions of ``t - r`` exactly, so
    the large cancelling terms inside ``S`` and ``K`` cancel to rounding
    instead of leaving an ``O(t^2 h^2)`` residue.  Only a handful of steps are
    taken, so running at the stability edge is harmless.
    """
    if n_levels < 3 or n_levels % 2 == 0:
        raise ValueError("n_levels must be odd and >= 3")
    h = sc.dr if h is None else h
    st = _Stepper(sc, snap.Phi.size)
    st.forcing = forcing
    m = n_levels // 2
    rows = [None] * n_levels
    rows[m] = snap.Phi
    for sign in (1.0, -1.0):
        Phi, Pi, t = snap.Phi.copy(), snap.Pi.copy(), snap.t
        for k in range(1, m + 1):
            Phi, Pi = st.step(t, Phi, Pi, sign * h)
            t += sign * h
            rows[m + int(sign) * k] = Phi
    return GridField2D(phi_from_Phi(np.array(rows), sc.dr), h, sc.dr, snap.t)


def window_supplier(sc: Scenario, snap: RadialSnapshot, h: float | None = None, forcing=None):
    cache: dict[int, GridField2D] = {}

    def supply(n_levels: int) -> GridField2D:
        n_levels = max(3, n_levels | 1)
        if n_levels not in cache:
            cache[n_levels] = evolve_window(sc, snap, n_levels, h, forcing)
        return cache[n_levels]

    return supply


# --- exact linear solution ------------------------------------------------------

class UnsupportedProfile(ValueError):
    pass


def exact_linear_solution(sc: Scenario, t, r) -> np.ndarray:
    """``phi(t, r)`` for the linear problem from odd-extended d'Alembert.

    With ``psi(x) = x P(|x|)`` (already odd) and zero velocity
    ``Phi = (psi(r+t) + psi(r-t)) / 2``; outgoing data gives
    ``Phi = (psi(r-t) + psi(|r-t|)) / 2``.
    """
    if not isinstance(sc.profile, Profile):
        raise UnsupportedProfile("exact solution needs a closed-form profile")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    psi = lambda x: x * sc.profile(np.abs(x))  # noqa: E731
    if sc.velocity == "zero":
        Phi = 0.5 * (psi(r + t) + psi(r - t))
    else:
        Phi = 0.5 * (psi(r - t) + psi(np.abs(r - t)))
    Phi = sc.polarity * sc.epsilon * Phi
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = Phi / r
    # r -> 0 limit: d/dr of Phi at r = 0
    if np.any(r == 0):
        h = 1e-6
        rr = np.full_like(r, h)
        if sc.velocity == "zero":
            lim = 0.5 * (psi(rr + t) + psi(rr - t)) / h
        else:
            lim = 0.5 * (psi(rr - t) + psi(np.abs(rr - t))) / h
        phi = np.where(r == 0, sc.polarity * sc.epsilon * lim, phi)
    return phi


def exact_linear_Phi(sc: Scenario, t, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r * exact_linear_solution(sc, t, np.where(r == 0, 1.0, r)) * (r != 0)


# --- metric fields --------------------------------------------------------------

@dataclass
class MetricFields:
    H: np.ndarray  # (n, 4, 4) contravariant, along the radial direction omega = e_z
    H_LL: np.ndarray
    H_LLbar: np.ndarray
    trace_bar_H: np.ndarray


def metric_fields(snap: RadialSnapshot, sc: Scenario) -> MetricFields:
    """Pointwise ``H^{ab}`` and its null components along the radial direction."""
    H00, Hs = H_components(sc, snap.phi)
    n = H00.size
    H = np.zeros((n, 4, 4))
    H[:, 0, 0] = H00
    for i in (1, 2, 3):
        H[:, i, i] = Hs
    return MetricFields(H=H, H_LL=H00 + Hs, H_LLbar=H00 - Hs, trace_bar_H=2.0 * Hs)


def H_LL_of_phi(sc: Scenario, phi: np.ndarray) -> np.ndarray:
    H00, Hs = H_components(sc, phi)
    return H00 + Hs


def dH_LL_dphi(sc: Scenario, phi: np.ndarray) -> np.ndarray:
    a1, a2, b1, b2 = sc.metric_coefficients()
    return (a1 + b1) + 2.0 * (a2 + b2) * phi


def linear_energy(snap: RadialSnapshot) -> float:
    """``int (Pi^2 + Phi_r^2) dr`` with the staggered difference for ``Phi_r``."""
    dr = snap.dr
    grad = np.diff(snap.Phi) / dr
    return float(np.sum(snap.Pi[1:-1] ** 2) * dr + np.sum(grad**2) * dr)
