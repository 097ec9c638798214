"""Radial eikonal function built from the integral curves of ``L2``.

``L2 = 2 d_p + (H_LL/2) d_q``.  Parametrising a curve by ``p = r + t``,

    dq/dp = H_LL / 4,        d ln(rho_q)/dp = -(d_q H_LL) / 4.

A curve with label ``rho`` keeps ``q = rho`` until it meets the surface
``|t - r| = t/2`` (at ``t = 2|rho|``) and is traced from there with
``rho_q = 1``.  ``H_LL`` and ``d_q H_LL`` are interpolated bilinearly in
``(t, q)`` between stored snapshots; near the cone these fields travel with
``q`` almost fixed, so this is far more accurate than interpolating in ``(t, r)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .radial_solver import Trajectory, dH_LL_dphi, H_components, H_LL_of_phi


class CrossedCharacteristics(RuntimeError):
    pass


class OutsideSnapshots(ValueError):
    pass


@dataclass
class _QField:
    """Snapshot fields resampled for ``(t, q)`` interpolation."""

    times: np.ndarray
    dr: float
    H: np.ndarray  # (n_t, n_r), indexed by r_j = q + t_k
    dqH: np.ndarray

    def __call__(self, t: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        times = self.times
        k = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
        w = (t - times[k]) / (times[k + 1] - times[k])
        out_H = np.zeros_like(t)
        out_dq = np.zeros_like(t)
        n_r = self.H.shape[1]
        for kk, wt in ((k, 1.0 - w), (k + 1, w)):
            x = (q + times[kk]) / self.dr
            j = np.clip(np.floor(x).astype(int), 0, n_r - 2)
            a = np.clip(x - j, 0.0, 1.0)
            inside = (x >= 0) & (x <= n_r - 1)
            h = (1 - a) * self.H[kk, j] + a * self.H[kk, j + 1]
            d = (1 - a) * self.dqH[kk, j] + a * self.dqH[kk, j + 1]
            out_H += wt * np.where(inside, h, 0.0)
            out_dq += wt * np.where(inside, d, 0.0)
        return out_H, out_dq


def hll_fields(traj: Trajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``H_LL``, ``d_q H_LL`` and ``|d H_LL|`` on the (snapshot, r) grid."""
    phi = traj.stack("phi")
    pt = traj.stack("dphi_dt")
    pr = traj.stack("dphi_dr")
    sc = traj.scenario
    H = H_LL_of_phi(sc, phi)
    dH = dH_LL_dphi(sc, phi)
    return H, dH * 0.5 * (pr - pt), np.abs(dH) * np.hypot(pt, pr)


def default_labels(t_end: float, dr: float, fine_extent: float = 4.0, growth: float = 1.05) -> np.ndarray:
    """Labels spaced ``dr/2`` on ``[-fine_extent, fine_extent]``, geometric beyond out to ``t_end/2``."""
    fine = np.arange(-fine_extent, fine_extent + 0.25 * dr, 0.5 * dr)
    outer = []
    x = fine_extent
    while x < 0.5 * t_end:
        x = min(x * growth, 0.5 * t_end)
        outer.append(x)
    outer = np.array(outer)
    labels = np.concatenate([-outer[::-1], fine, outer])
    return np.unique(np.round(labels, 12))


@dataclass
class CharacteristicBundle:
    labels: np.ndarray
    p_entry: np.ndarray
    times: np.ndarray  # snapshot times
    q_at: np.ndarray  # (n_t, n_labels), NaN before entry or after exit
    lnrq_at: np.ndarray
    p_rec: np.ndarray  # coarse common p grid
    q_rec: np.ndarray  # (n_p, n_labels)
    lnrq_rec: np.ndarray
    exited: np.ndarray  # bool per label: left the stored time range
    flags: dict = field(default_factory=dict)

    def rows(self):
        """Rows ``(label_rho, s, t, r, q)`` of the coarse records, label-major."""
        for c, lab in enumerate(self.labels):
            for i, p in enumerate(self.p_rec):
                q = self.q_rec[i, c]
                if np.isfinite(q):
                    yield lab, 0.5 * p, 0.5 * (p - q), 0.5 * (p + q), q


def _entry(labels: np.ndarray) -> np.ndarray:
    a = np.abs(labels)
    return np.where(labels >= 0, 5.0 * a, 3.0 * a)


def trace_characteristics(traj: Trajectory, labels: np.ndarray | None = None, dp: float | None = None,
                          record_dp: float = 0.5) -> CharacteristicBundle:
    """RK4 in ``p`` for every label at once, on a common ``p`` grid.

    A label that enters between two grid values is started at its own entry
    ``p`` and advanced by the partial step.  Positions are captured at every
    snapshot time by linear interpolation in ``p``.
    """
    times = traj.times
    if len(times) < 2:
        raise OutsideSnapshots("need at least two snapshots")
    t_last = float(times[-1])
    dr = traj.dr
    if labels is None:
        labels = default_labels(t_last, dr)
    labels = np.asarray(labels, dtype=float)
    if dp is None:
        dp = dr
    H, dqH, _ = hll_fields(traj)
    qf = _QField(times, dr, H, dqH)

    pe = _entry(labels)
    nL = labels.size
    n_t = len(times)
    q_at = np.full((n_t, nL), np.nan)
    l_at = np.full((n_t, nL), np.nan)
    # before entry the curve is q = rho, rho_q = 1
    for k, t in enumerate(times):
        before = 2.0 * np.abs(labels) >= t
        q_at[k, before] = labels[before]
        l_at[k, before] = 0.0

    p_max = float(np.max(2.0 * t_last + labels)) + dp
    n_steps = int(np.ceil(p_max / dp))
    rec_every = max(1, int(round(record_dp / dp)))
    p_rec, q_rec, l_rec = [], [], []

    q = labels.copy()
    lr = np.zeros(nL)
    alive = np.ones(nL, dtype=bool)
    started = np.zeros(nL, dtype=bool)

    def rhs(p, q_):
        t = 0.5 * (p - q_)
        h, d = qf(t, q_)
        return 0.25 * h, -0.25 * d

    for n in range(n_steps):
        p0, p1 = n * dp, (n + 1) * dp
        newly = (~started) & (pe < p1)
        started |= newly
        act = started & alive
        if not act.any():
            continue
        pa = np.maximum(pe[act], p0)
        h = p1 - pa
        qa, la = q[act], lr[act]
        k1q, k1l = rhs(pa, qa)
        k2q, k2l = rhs(pa + 0.5 * h, qa + 0.5 * h * k1q)
        k3q, k3l = rhs(pa + 0.5 * h, qa + 0.5 * h * k2q)
        k4q, k4l = rhs(pa + h, qa + h * k3q)
        qn = qa + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        ln = la + h / 6.0 * (k1l + 2 * k2l + 2 * k3l + k4l)
        t_old = 0.5 * (pa - qa)
        t_new = 0.5 * (p1 - qn)
        idx = np.flatnonzero(act)
        # capture snapshot crossings inside (t_old, t_new]
        k_lo = np.searchsorted(times, t_old, side="right")
        k_hi = np.searchsorted(times, t_new, side="right")
        n_cross = k_hi - k_lo
        for extra in range(int(n_cross.max(initial=0))):
            sel = np.flatnonzero(n_cross > extra)
            k = k_lo[sel] + extra
            c = idx[sel]
            a = (times[k] - t_old[sel]) / (t_new[sel] - t_old[sel])
            keep = 2.0 * np.abs(labels[c]) < times[k]
            k, c, a, sel = k[keep], c[keep], a[keep], sel[keep]
            q_at[k, c] = (1 - a) * qa[sel] + a * qn[sel]
            l_at[k, c] = (1 - a) * la[sel] + a * ln[sel]
        q[act], lr[act] = qn, ln
        gone = t_new > t_last
        alive[idx[gone]] = False
        if (n + 1) % rec_every == 0:
            qr = np.where(started & alive, q, np.nan)
            qr = np.where(~started, labels, qr)
            lrr = np.where(~started, 0.0, np.where(started & alive, lr, np.nan))
            p_rec.append(p1)
            q_rec.append(qr)
            l_rec.append(lrr)
        if not alive.any() and started.all():
            break
    return CharacteristicBundle(
        labels=labels, p_entry=pe, times=times, q_at=q_at, lnrq_at=l_at,
        p_rec=np.array(p_rec), q_rec=np.array(q_rec), lnrq_rec=np.array(l_rec),
        exited=~alive, flags={"dp": dp},
    )


@dataclass
class EikonalFields:
    times: np.ndarray
    r: np.ndarray
    rho: np.ndarray
    rho_q_fd: np.ndarray
    rho_q_factor: np.ndarray
    valid: np.ndarray
    in_strip: np.ndarray
    H_LL: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return self.r[None, :] - self.times[:, None]

    def drho_dr(self, k: int) -> np.ndarray:
        """``d_r rho`` at fixed ``t = times[k]``, equal to ``(1 - H_LL/4) rho_q``."""
        return (1.0 - 0.25 * self.H_LL[k]) * self.rho_q_factor[k]


def rho_fields(bundle: CharacteristicBundle, traj: Trajectory) -> EikonalFields:
    """Assemble ``rho`` and both ``rho_q`` estimates on the snapshot grid."""
    times = bundle.times
    r = traj.r
    H, _, _ = hll_fields(traj)
    n_t, n_r = len(times), r.size
    rho = np.empty((n_t, n_r))
    rq_fd = np.ones((n_t, n_r))
    rq_fac = np.ones((n_t, n_r))
    valid = np.ones((n_t, n_r), dtype=bool)
    strip = np.zeros((n_t, n_r), dtype=bool)
    labels = bundle.labels
    for k, t in enumerate(times):
        rho[k] = r - t
        if t <= 0:
            continue
        s = np.abs(t - r) < 0.5 * t
        strip[k] = s
        inner = (np.abs(labels) < 0.5 * t * (1 - 1e-9)) & np.isfinite(bundle.q_at[k])
        rc = np.concatenate([[0.5 * t], t + bundle.q_at[k, inner], [1.5 * t]])
        lab = np.concatenate([[-0.5 * t], labels[inner], [0.5 * t]])
        lr = np.concatenate([[0.0], bundle.lnrq_at[k, inner], [0.0]])
        d = np.diff(rc)
        if np.any(d <= 0):
            raise CrossedCharacteristics(f"characteristics crossed at t = {t:.17g}")
        if not s.any():
            continue
        rs = r[s]
        rho[k, s] = PchipInterpolator(rc, lab)(rs)
        slope = np.gradient(lab, rc) if rc.size > 2 else np.ones_like(rc)
        hk = H[k, s]
        rq_fd[k, s] = np.interp(rs, rc, slope) / (1.0 - 0.25 * hk)
        rq_fac[k, s] = np.exp(np.interp(rs, rc, lr))
        # a gap wider than a few label spacings leaves the interpolation unsupported
        gap = np.interp(rs, rc[1:], d, left=d[0], right=d[-1])
        valid[k, s] = np.isfinite(rho[k, s]) & (gap < 0.05 * t + 1.0)
    return EikonalFields(times=times, r=r, rho=rho, rho_q_fd=rq_fd, rho_q_factor=rq_fac,
                         valid=valid, in_strip=strip, H_LL=H)


@dataclass
class EikonalBoundsReport:
    epsilon: float
    nu: float
    c1_hypothesis: float
    c1_eikonal1: float
    c1_eikonal2: float
    c2_eikonal6: float
    margin_eikonal1: float
    margin_eikonal2: float
    rho_q_positive: bool
    min_rho_q: float
    method_rel_diff: float
    residual_times: np.ndarray
    residual_sup: np.ndarray
    residual_exponent: float
    outside_exact: bool

    @property
    def eikonal1_holds(self) -> bool:
        return self.margin_eikonal1 >= 0

    @property
    def eikonal2_holds(self) -> bool:
        return self.margin_eikonal2 >= 0

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else (bool(v) if isinstance(v, np.bool_) else v)
        return out


def _sup_ratio(num: np.ndarray, den: np.ndarray, floor: float = 1e-12) -> float:
    """``sup |num|/den``; numerators below ``floor`` are rounding noise and count as zero."""
    num = np.abs(num)
    num = np.where(num < floor, 0.0, num)
    pos = den > 0
    bad = (~pos) & (num > 1e-13)
    if bad.any():
        return float("inf")
    if not pos.any():
        return 0.0
    return float(np.max(num[pos] / den[pos]))


def eikonal6_constant(bundle: CharacteristicBundle, epsilon: float, nu: float) -> float:
    """Fitted ``c2`` for ``|d_rho d_q rho| <= c2 eps (1+|rho|)^{-1-nu} rho_q ln((1+t)/(1+|rho|))``.

    ``d_rho d_q rho = rho_q d_rho ln rho_q`` is differentiated across labels at
    fixed ``p`` on the recorded grid, restricted to the strip interior.
    """
    best = 0.0
    lab = bundle.labels
    for i, p in enumerate(bundle.p_rec):
        q = bundle.q_rec[i]
        lr = bundle.lnrq_rec[i]
        t = 0.5 * (p - q)
        ok = np.isfinite(q) & np.isfinite(lr) & (2.0 * np.abs(lab) < t)
        if ok.sum() < 3:
            continue
        x, y, tt = lab[ok], lr[ok], t[ok]
        dy = np.gradient(y, x)
        base = np.log((1.0 + tt) / (1.0 + np.abs(x)))
        den = epsilon * (1.0 + np.abs(x)) ** (-1.0 - nu) * base
        best = max(best, _sup_ratio(dy, den))
    return best


def verify_eikonal_bounds(fields: EikonalFields, traj: Trajectory, epsilon: float, nu: float = 0.9,
                          bundle: CharacteristicBundle | None = None,
                          fit_window: tuple[float, float] | None = None) -> EikonalBoundsReport:
    m = fields.valid
    if not m.any():
        raise ValueError("empty validity mask")
    T = np.broadcast_to(fields.times[:, None], m.shape)
    q = fields.q
    rho = fields.rho
    H, _, absdH = hll_fields(traj)
    one_t = 1.0 + T
    one_rho = 1.0 + np.abs(rho)
    c1_hyp = max(
        float(np.max((absdH * one_t * one_rho**nu / epsilon)[m])),
        float(np.max((np.abs(H) * one_t / (epsilon * (1.0 + np.abs(q))))[m])),
    )
    base = np.log(one_t / one_rho)
    V = one_rho ** (-nu)
    rq = fields.rho_q_factor
    c1_e1 = _sup_ratio(np.log(rq)[m], (epsilon * V * base)[m])
    c1_e2 = _sup_ratio(np.log((1.0 + np.abs(q)) / one_rho)[m], (epsilon * base)[m])
    both = m & fields.in_strip
    rel = float(np.max(np.abs(fields.rho_q_fd - rq)[both] / rq[both])) if both.any() else 0.0
    c2 = eikonal6_constant(bundle, epsilon, nu) if bundle is not None else float("nan")
    # g^{ab} rho_a rho_b in radial symmetry with d_p rho = -(H_LL/4) rho_q
    H00, Hs = H_components(traj.scenario, traj.stack("phi"))
    resid = rq**2 * (0.5 * (H00 + Hs) * (H00 - Hs) + (H00 + Hs) ** 3 / 16.0)
    sup = np.array([np.max(np.abs(resid[k][both[k]])) if both[k].any() else 0.0 for k in range(len(fields.times))])
    t_end = float(fields.times[-1])
    lo, hi = fit_window if fit_window is not None else (t_end / 10.0, t_end)
    sel = (fields.times >= lo) & (fields.times <= hi) & (sup > 0)
    expo = float(np.polyfit(np.log1p(fields.times[sel]), np.log(sup[sel]), 1)[0]) if sel.sum() >= 2 else float("nan")
    outside = ~fields.in_strip
    exact = bool(np.all(fields.rho[outside] == (fields.r[None, :] - fields.times[:, None])[outside]))
    return EikonalBoundsReport(
        epsilon=epsilon, nu=nu, c1_hypothesis=c1_hyp, c1_eikonal1=c1_e1, c1_eikonal2=c1_e2, c2_eikonal6=c2,
        margin_eikonal1=c1_hyp - c1_e1, margin_eikonal2=c1_hyp - c1_e2,
        rho_q_positive=bool(np.all(rq[m] > 0) and np.all(fields.rho_q_fd[m] > 0)),
        min_rho_q=float(min(np.min(rq[m]), np.min(fields.rho_q_fd[m]))),
        method_rel_diff=rel, residual_times=fields.times, residual_sup=sup, residual_exponent=expo,
        outside_exact=exact,
    )
