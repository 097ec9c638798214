"""Minkowski null frame algebra.

Vectors are length-4 arrays (index 0 is time) and symmetric rank-2 tensors
are 4x4 arrays of *contravariant* components.  Indices are always lowered
with the Minkowski metric ``m = diag(-1, 1, 1, 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])
MINKOWSKI.setflags(write=False)


class InvalidDirection(ValueError):
    pass


def lower(v: np.ndarray) -> np.ndarray:
    return MINKOWSKI @ np.asarray(v, dtype=float)


def sym_tensor(entries) -> np.ndarray:
    """Build a symmetric 4x4 tensor, symmetrising whatever is passed in."""
    g = np.asarray(entries, dtype=float).reshape(4, 4)
    return 0.5 * (g + g.T)


def four_vector(t: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([t, x[0], x[1], x[2]], dtype=float)


def normalize_direction(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float).reshape(3)
    n = np.linalg.norm(w)
    if not np.isfinite(n) or n == 0.0:
        raise InvalidDirection(f"direction must be a non-zero finite 3-vector, got {omega!r}")
    return w / n


@dataclass(frozen=True)
class NullFrame:
    omega: np.ndarray
    L: np.ndarray
    Lbar: np.ndarray
    S1: np.ndarray
    S2: np.ndarray

    @property
    def angular(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.S1, self.S2)

    def vectors(self) -> dict[str, np.ndarray]:
        return {"L": self.L, "Lbar": self.Lbar, "S1": self.S1, "S2": self.S2}


def frame_at(omega) -> NullFrame:
    """Null frame ``{L, Lbar, S1, S2}`` at the direction ``omega``.

    ``S1`` is the normalised projection of the coordinate axis least aligned
    with ``omega`` (lowest index on ties) onto the plane orthogonal to
    ``omega``; ``S2 = omega x S1``.  The choice is deterministic and smooth
    away from the sets where the selected axis switches.
    """
    w = normalize_direction(omega)
    k = int(np.argmin(np.abs(w)))
    e = np.zeros(3)
    e[k] = 1.0
    s1 = e - np.dot(e, w) * w
    s1 /= np.linalg.norm(s1)
    s2 = np.cross(w, s1)
    return NullFrame(
        omega=w,
        L=four_vector(1.0, w),
        Lbar=four_vector(1.0, -w),
        S1=four_vector(0.0, s1),
        S2=four_vector(0.0, s2),
    )


def contract(g: np.ndarray, U: np.ndarray, V: np.ndarray) -> float:
    """``g_{UV} = g^{ab} U_a V_b`` with both vectors lowered by ``m``."""
    return float(lower(U) @ np.asarray(g, dtype=float) @ lower(V))


@dataclass(frozen=True)
class NullComponents:
    gLL: float
    gLLbar: float
    gLbarLbar: float
    gLA: np.ndarray  # shape (2,)
    gLbarA: np.ndarray  # shape (2,)
    gAB: np.ndarray  # shape (2, 2), symmetric

    @property
    def angular_trace(self) -> float:
        return float(np.trace(self.gAB))

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [[self.gLL, self.gLLbar, self.gLbarLbar], self.gLA, self.gLbarA, self.gAB[np.triu_indices(2)]]
        )


def decompose(g: np.ndarray, omega) -> NullComponents:
    f = frame_at(omega)
    A = f.angular
    c = lambda U, V: contract(g, U, V)  # noqa: E731
    return NullComponents(
        gLL=0.25 * c(f.Lbar, f.Lbar),
        gLLbar=0.25 * c(f.Lbar, f.L),
        gLbarLbar=0.25 * c(f.L, f.L),
        gLA=np.array([-0.5 * c(f.Lbar, a) for a in A]),
        gLbarA=np.array([-0.5 * c(f.L, a) for a in A]),
        gAB=np.array([[c(a, b) for b in A] for a in A]),
    )


def _sym_outer(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.outer(u, v) + np.outer(v, u)


def reconstruct(c: NullComponents, omega) -> np.ndarray:
    f = frame_at(omega)
    L, Lb = f.L, f.Lbar
    g = c.gLL * np.outer(L, L) + c.gLbarLbar * np.outer(Lb, Lb) + c.gLLbar * _sym_outer(L, Lb)
    for i, a in enumerate(f.angular):
        g += c.gLA[i] * _sym_outer(L, a) + c.gLbarA[i] * _sym_outer(Lb, a)
        for j, b in enumerate(f.angular):
            g += c.gAB[i, j] * np.outer(a, b)
    return g


@dataclass(frozen=True)
class FrameDecomposition:
    L1: np.ndarray
    gamma: np.ndarray
    ell: float
    HLL: float
    HLLbar: float
    trace_bar_H: float

    def metric(self, omega) -> np.ndarray:
        """Reassemble ``g = -1/2 (L1 Lbar + Lbar L1) + gamma``."""
        Lb = frame_at(omega).Lbar
        return -0.5 * _sym_outer(self.L1, Lb) + self.gamma


def frame_decomposition(H: np.ndarray, omega) -> FrameDecomposition:
    """Split ``g = m + H`` into the transversal vector ``L1`` and the tangential part ``gamma``.

    Also returns ``ell = trbar(H) + H_{L Lbar} - H_{LL}/2`` where ``trbar`` sums
    the angular diagonal ``H_{AA}``.
    """
    H = np.asarray(H, dtype=float)
    f = frame_at(omega)
    g = MINKOWSKI + H
    comps = decompose(g, omega)
    A = f.angular
    L1 = -0.5 * contract(g, f.L, f.Lbar) * f.L - 0.25 * contract(g, f.L, f.L) * f.Lbar
    for a in A:
        L1 = L1 + contract(g, f.L, a) * a
    gamma = comps.gLL * np.outer(f.L, f.L)
    for i, a in enumerate(A):
        gamma = gamma + comps.gLA[i] * _sym_outer(a, f.L)
        for j, b in enumerate(A):
            gamma = gamma + comps.gAB[i, j] * np.outer(a, b)
    HLL = contract(H, f.L, f.L)
    HLLbar = contract(H, f.L, f.Lbar)
    trH = sum(contract(H, a, a) for a in A)
    return FrameDecomposition(
        L1=L1, gamma=gamma, ell=trH + HLLbar - 0.5 * HLL, HLL=HLL, HLLbar=HLLbar, trace_bar_H=trH
    )


def wave_operator_residual(H: np.ndarray, omega, hessian: np.ndarray) -> float:
    """``g^{ab} d_a d_b phi - g_{LL} d_q^2 phi`` at a point.

    ``hessian[a, b]`` holds ``d_a d_b phi`` (coordinate derivatives, index 0 = t).
    With ``d_q = -Lbar^a d_a / 2``, ``d_q^2 phi = Lbar^a Lbar^b d_a d_b phi / 4``.
    """
    hess = np.asarray(hessian, dtype=float)
    f = frame_at(omega)
    g = MINKOWSKI + np.asarray(H, dtype=float)
    dqq = 0.25 * f.Lbar @ hess @ f.Lbar
    return float(np.sum(g * hess) - contract(g, f.L, f.L) * dqq)


def tangential_hessian_norm(omega, hessian: np.ndarray) -> float:
    """``|dbar d phi|``: the frame-tangential rows ``T^a d_a d_b phi``, T in {L, S1, S2}."""
    hess = np.asarray(hessian, dtype=float)
    f = frame_at(omega)
    rows = np.array([T @ hess for T in (f.L, f.S1, f.S2)])
    return float(np.sqrt(np.sum(rows**2)))
