"""Kaplan-Meier and Nelson-Aalen step curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True, eq=False)
class StepCurve:
    """Right-continuous step function sampled on a strictly increasing grid.

    ``kind`` is ``"survival"`` or ``"chf"``. Before the first grid time the
    curve sits at its left boundary value (1 for survival, 0 for cumulative
    hazard); after the last grid time it stays flat.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str = "survival"

    def __post_init__(self):
        if self.kind not in ("survival", "chf"):
            raise UsageError(f"unknown curve kind {self.kind!r}")
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.shape != values.shape or grid.ndim != 1:
            raise UsageError("grid and values must be 1-d of equal length")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def initial(self) -> float:
        return 1.0 if self.kind == "survival" else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.grid, t, side="right") - 1
        padded = np.concatenate([[self.initial], self.values])
        out = padded[k + 1]
        return float(out) if out.ndim == 0 else out


def _event_table(times, events):
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events)
    if times.size == 0:
        raise UsageError("estimator needs at least one sample")
    if times.shape != events.shape:
        raise UsageError("times and events must have equal length")
    uniq, inv = np.unique(times, return_inverse=True)
    d = np.bincount(inv, weights=events.astype(np.float64), minlength=uniq.size)
    removed = np.bincount(inv, minlength=uniq.size)
    at_risk = np.cumsum(removed[::-1])[::-1].astype(np.float64)
    keep = d > 0
    return uniq[keep], d[keep], at_risk[keep]


def _check_grid(eval_grid):
    grid = np.asarray(eval_grid, dtype=np.float64)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise UsageError("eval_grid must be strictly increasing")
    return grid


def _on_grid(knots, values, grid, initial):
    k = np.searchsorted(knots, grid, side="right") - 1
    return np.concatenate([[initial], values])[k + 1]


def kaplan_meier(times, events, eval_grid) -> StepCurve:
    """Product-limit survival estimate evaluated on ``eval_grid``."""
    grid = _check_grid(eval_grid)
    u, d, Y = _event_table(times, events)
    surv = np.cumprod(1.0 - d / Y)
    return StepCurve(grid, _on_grid(u, surv, grid, 1.0), "survival")


def nelson_aalen(times, events, eval_grid) -> StepCurve:
    """Cumulative hazard ``H(t) = sum_{u <= t} d_u / Y_u`` on ``eval_grid``."""
    grid = _check_grid(eval_grid)
    u, d, Y = _event_table(times, events)
    chf = np.cumsum(d / Y)
    return StepCurve(grid, _on_grid(u, chf, grid, 0.0), "chf")
