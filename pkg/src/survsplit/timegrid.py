"""Node-local failure-time grid and the quantities both split scanners share."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NodeView
from .errors import NoEvents


@dataclass(frozen=True, eq=False)
class NodeTimeGrid:
    """Failure-time grid of one node.

    Slot ``t`` holds the ``t``-th distinct failure time of the node. Per-sample
    arrays (``sample_grid_index``, ``gamma``, ``events``) follow the node's
    index order. ``sample_grid_index`` is the slot of the largest failure time
    not exceeding the sample's time, or -1 when the sample precedes every
    failure time.
    """

    failure_times: np.ndarray
    d: np.ndarray
    Y: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    A: np.ndarray
    sample_grid_index: np.ndarray
    gamma: np.ndarray
    gamma_bar: float
    events: np.ndarray

    @property
    def M(self) -> int:
        return self.failure_times.size

    @property
    def n(self) -> int:
        return self.gamma.size


def hypergeometric_beta(d: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``((Y - d) / (Y - 1)) * d / Y**2``, defined as 0 where ``Y <= 1``."""
    d = np.asarray(d, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    out = np.zeros_like(Y)
    ok = Y > 1
    out[ok] = (Y[ok] - d[ok]) / (Y[ok] - 1.0) * d[ok] / (Y[ok] * Y[ok])
    return out


def build_time_grid(node: NodeView) -> NodeTimeGrid:
    """Remap the node's failure times to slots ``0..M-1`` and derive
    event counts, at-risk counts, the log-rank weights, cumulative hazard
    increments and per-sample expected failures.

    Raises
    ------
    NoEvents
        If no sample in the node has an observed failure.
    """
    times = node.times
    events = node.events
    if not np.any(events == 1):
        raise NoEvents(f"node of {len(node)} samples has no events")

    failure_times = np.unique(times[events == 1])
    M = failure_times.size
    # censored ties with a failure time share its slot (they are still at risk)
    slot = np.searchsorted(failure_times, times, side="right") - 1

    d = np.bincount(slot[events == 1], minlength=M).astype(np.int64)
    per_slot = np.bincount(slot[slot >= 0], minlength=M)
    Y = np.cumsum(per_slot[::-1])[::-1].astype(np.int64)

    alpha = d / Y
    beta = hypergeometric_beta(d, Y)
    A = np.cumsum(alpha)
    gamma = np.where(slot >= 0, A[np.maximum(slot, 0)], 0.0)

    return NodeTimeGrid(
        failure_times=failure_times,
        d=d,
        Y=Y,
        alpha=alpha,
        beta=beta,
        A=A,
        sample_grid_index=slot.astype(np.int64),
        gamma=gamma,
        gamma_bar=float(gamma.sum()),
        events=np.ascontiguousarray(events, dtype=np.int64),
    )
