"""Report containers shared by the diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class InequalityReport:
    """Per-time LHS/RHS pairs for one inequality ``LHS <= C * RHS``.

    ``constant`` is the smallest C making the inequality hold on the data
    (``max LHS/RHS``); ``margin`` is ``RHS - LHS`` for the inequality with the
    stated constant already folded into the RHS.
    """

    inequality_id: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant: float
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.lhs = np.atleast_1d(np.asarray(self.lhs, dtype=float))
        self.rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return bool(np.all(self.margin >= 0.0))

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "times": self.times.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs": self.rhs.tolist(),
            "margin": self.margin.tolist(),
            "constant": float(self.constant),
            "flags": dict(self.flags),
            "extra": {k: _plain(v) for k, v in self.extra.items()},
        }


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def min_constant(lhs: np.ndarray, rhs: np.ndarray, rel_floor: float = 1e-14) -> tuple[float, int | None]:
    """Smallest C with ``lhs <= C rhs`` over finite entries, and the worst index.

    Entries where both sides vanish are ignored; a positive LHS over a
    vanishing RHS gives ``inf``.
    """
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    if not ok.any():
        raise ValueError("no valid points to compare")
    lhs, rhs = np.where(ok, lhs, 0.0), np.where(ok, rhs, 0.0)
    scale = max(np.max(np.abs(rhs)), np.max(np.abs(lhs)), 0.0)
    if scale == 0.0:
        return 0.0, None
    floor = rel_floor * scale
    zero_rhs = rhs <= floor
    if np.any(zero_rhs & (lhs > floor)):
        idx = int(np.argmax(np.where(zero_rhs, lhs, -np.inf)))
        return float("inf"), idx
    ratio = np.where(zero_rhs, 0.0, lhs / np.where(zero_rhs, 1.0, rhs))
    idx = int(np.argmax(ratio))
    return float(ratio[idx]), idx
