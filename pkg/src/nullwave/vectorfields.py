"""Minkowski vector fields reduced to radial (t, r) grids.

For radially symmetric functions the rotations annihilate ``phi`` and the
contracted boost ``omega^i Omega_{0i}`` reduces to ``K = r d_t + t d_r``, so
the commuting family collapses to the four-letter alphabet ``S, K, Dt, Dr``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .reports import InequalityReport, min_constant

MIN_RADIAL_POINTS = 8


class VectorFieldId(str, enum.Enum):
    S = "S"
    K = "K"
    Dt = "Dt"
    Dr = "Dr"


ALPHABET: tuple[VectorFieldId, ...] = (VectorFieldId.S, VectorFieldId.K, VectorFieldId.Dt, VectorFieldId.Dr)
PARTIALS: tuple[VectorFieldId, ...] = (VectorFieldId.Dt, VectorFieldId.Dr)
MAX_WORD = 3


class GridTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GridField2D:
    """Samples on ``n_t`` consecutive time levels times ``n_r`` radial points.

    Row ``k`` sits at ``t_center + (k - (n_t - 1)/2) dt``; column ``j`` at
    ``r0 + j dr``.  Invalid samples carry NaN.
    """

    values: np.ndarray
    dt: float
    dr: float
    t_center: float
    r0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be 2-D (time levels x radial points)")
        if v.shape[0] < 3 or v.shape[0] % 2 == 0:
            raise GridTooSmall(f"need an odd number >= 3 of time levels, got {v.shape[0]}")
        if v.shape[1] < MIN_RADIAL_POINTS:
            raise GridTooSmall(f"need at least {MIN_RADIAL_POINTS} radial points, got {v.shape[1]}")
        if not (self.dt > 0 and self.dr > 0):
            raise ValueError("dt and dr must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n_levels(self) -> int:
        return self.values.shape[0]

    @property
    def center_index(self) -> int:
        return self.n_levels // 2

    @property
    def times(self) -> np.ndarray:
        return self.t_center + (np.arange(self.n_levels) - self.center_index) * self.dt

    @property
    def r(self) -> np.ndarray:
        return self.r0 + self.dr * np.arange(self.values.shape[1])

    @property
    def center(self) -> np.ndarray:
        return self.values[self.center_index]

    def with_values(self, values: np.ndarray) -> "GridField2D":
        return replace(self, values=values)

    @classmethod
    def from_function(cls, f: Callable, t_center: float, dt: float, dr: float,
                      n_levels: int = 3, n_r: int = 64, r0: float = 0.0) -> "GridField2D":
        t = t_center + (np.arange(n_levels) - n_levels // 2) * dt
        r = r0 + dr * np.arange(n_r)
        T, R = np.meshgrid(t, r, indexing="ij")
        return cls(np.asarray(f(T, R), dtype=float) * np.ones_like(T), dt, dr, t_center, r0)


def _d_dt(v: np.ndarray, dt: float) -> np.ndarray:
    out = np.full_like(v, np.nan)
    out[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2.0 * dt)
    return out


def _d_dr(v: np.ndarray, dr: float) -> np.ndarray:
    out = np.full_like(v, np.nan)
    out[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * dr)
    return out


def _invalidate_ring(v: np.ndarray) -> np.ndarray:
    v[0, :] = v[-1, :] = np.nan
    v[:, 0] = v[:, -1] = np.nan
    return v


def partial_t(f: GridField2D) -> np.ndarray:
    return _invalidate_ring(_d_dt(f.values, f.dt))


def partial_r(f: GridField2D) -> np.ndarray:
    return _invalidate_ring(_d_dr(f.values, f.dr))


def apply_field(f: GridField2D, Z: Union[VectorFieldId, str]) -> GridField2D:
    """Apply one vector field with centred second-order differences.

    The outermost time levels and radial points of the result are NaN.
    """
    Z = VectorFieldId(Z)
    T, R = np.meshgrid(f.times, f.r, indexing="ij")
    if Z is VectorFieldId.Dt:
        out = _d_dt(f.values, f.dt)
    elif Z is VectorFieldId.Dr:
        out = _d_dr(f.values, f.dr)
    elif Z is VectorFieldId.S:
        out = T * _d_dt(f.values, f.dt) + R * _d_dr(f.values, f.dr)
    else:
        out = R * _d_dt(f.values, f.dt) + T * _d_dr(f.values, f.dr)
    return f.with_values(_invalidate_ring(out))


Word = tuple[VectorFieldId, ...]
Supplier = Union[GridField2D, Callable[[int], GridField2D]]


def as_word(I: Iterable) -> Word:
    return tuple(VectorFieldId(z) for z in I)


def required_levels(word_length: int) -> int:
    return max(3, 2 * word_length + 1)


def _resolve(supplier: Supplier, n_levels: int) -> GridField2D:
    f = supplier(n_levels) if callable(supplier) else supplier
    if f.n_levels < n_levels:
        raise GridTooSmall(f"window has {f.n_levels} time levels, {n_levels} needed")
    return f


def apply_multi(supplier: Supplier, I: Sequence) -> GridField2D:
    """``Z^I f`` for an ordered word, applied right to left (last letter first)."""
    word = as_word(I)
    if len(word) > MAX_WORD:
        raise ValueError(f"words are capped at length {MAX_WORD}")
    f = _resolve(supplier, required_levels(len(word)))
    for z in reversed(word):
        f = apply_field(f, z)
    return f


class WordCache:
    """Memoised ``Z^I f`` over all words, sharing common suffixes."""

    def __init__(self, f: GridField2D):
        self.base = f
        self._cache: dict[Word, GridField2D] = {(): f}

    def __call__(self, word: Sequence) -> GridField2D:
        word = as_word(word)
        hit = self._cache.get(word)
        if hit is None:
            hit = apply_field(self(word[1:]), word[0])
            self._cache[word] = hit
        return hit


@lru_cache(maxsize=None)
def words(length: int, alphabet: tuple = ALPHABET) -> tuple[Word, ...]:
    return tuple(itertools.product(alphabet, repeat=length))


def words_up_to(length: int, alphabet: tuple = ALPHABET) -> tuple[Word, ...]:
    return tuple(w for n in range(length + 1) for w in words(n, alphabet))


def zsum(cache: WordCache, orders: Iterable[int]) -> np.ndarray:
    """``sum |Z^I f|`` at the centre level over all words of the given lengths."""
    total = None
    for n in orders:
        for w in words(n):
            v = np.abs(cache(w).center)
            total = v if total is None else total + v
    return total


@dataclass(frozen=True)
class CommutatorTable:
    C: dict
    first_order: dict

    def __getitem__(self, z) -> float:
        return self.C[VectorFieldId(z)]


def commutator_table() -> CommutatorTable:
    """``[Z, box] = -C_Z box`` and ``[Z, d_a] = C_{Za}^b d_b`` for the radial alphabet."""
    Z = VectorFieldId
    C = {Z.S: 2.0, Z.K: 0.0, Z.Dt: 0.0, Z.Dr: 0.0}
    first = {
        Z.S: {Z.Dt: {Z.Dt: -1.0}, Z.Dr: {Z.Dr: -1.0}},
        Z.K: {Z.Dt: {Z.Dr: -1.0}, Z.Dr: {Z.Dt: -1.0}},
        Z.Dt: {Z.Dt: {}, Z.Dr: {}},
        Z.Dr: {Z.Dt: {}, Z.Dr: {}},
    }
    return CommutatorTable(C=C, first_order=first)


def _ratio_report(name: str, t: float, lhs: np.ndarray, rhs: np.ndarray) -> InequalityReport:
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    if not ok.any():
        raise ValueError(f"{name}: empty valid region")
    C, idx = min_constant(lhs[ok], rhs[ok])
    lw = float(lhs[ok][idx]) if idx is not None else 0.0
    rw = float(rhs[ok][idx]) if idx is not None else 0.0
    return InequalityReport(name, [t], [lw], [C * rw], C, extra={"n_points": int(ok.sum())})


def tangential_bound_report(f: GridField2D, margin: int = 0) -> dict[str, InequalityReport]:
    """Measured constants for the vector-field derivative bounds on one snapshot.

    ``tanZ``:      (1+t+r)|dbar f| + (1+|t-r|)|d f|  <=  C sum_{|I|=1} |Z^I f|
    ``derZ``:      (1+t+r)|d f|  <=  C (r |d_q f| + sum_{|I|=1} |Z^I f|)
    ``derframeZ_k``: (1+|t-r|)^k |d^k f|  <=  C sum_{|I|<=k} |Z^I f|,  k = 1, 2

    Radially ``dbar f = d_L f = f_t + f_r``.  ``margin`` drops extra radial
    points at both ends.
    """
    cache = WordCache(f)
    t = f.t_center
    r = f.r
    c = f.center_index
    ft = cache([VectorFieldId.Dt]).values[c]
    fr = cache([VectorFieldId.Dr]).values[c]
    grad = np.hypot(ft, fr)
    dbar = np.abs(ft + fr)
    dq = 0.5 * np.abs(fr - ft)
    z1 = zsum(cache, [1])
    keep = np.ones_like(r, dtype=bool)
    if margin > 0:
        keep[:margin] = keep[-margin:] = False
    mask = lambda a: np.where(keep, a, np.nan)  # noqa: E731
    reports = {
        "tanZ": _ratio_report("tanZ", t, mask((1 + t + r) * dbar + (1 + np.abs(t - r)) * grad), mask(z1)),
        "derZ": _ratio_report("derZ", t, mask((1 + t + r) * grad), mask(r * dq + z1)),
        "derframeZ_1": _ratio_report("derframeZ_1", t, mask((1 + np.abs(t - r)) * grad),
                                     mask(zsum(cache, [0, 1]))),
    }
    if f.n_levels >= 5:
        D = VectorFieldId
        ftt = cache([D.Dt, D.Dt]).values[c]
        ftr = cache([D.Dt, D.Dr]).values[c]
        frr = cache([D.Dr, D.Dr]).values[c]
        hess = np.sqrt(ftt**2 + 2 * ftr**2 + frr**2)
        reports["derframeZ_2"] = _ratio_report(
            "derframeZ_2", t, mask((1 + np.abs(t - r)) ** 2 * hess), mask(zsum(cache, [0, 1, 2]))
        )
    return reports
