"""Prediction-error metrics and paired comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricUndefined, UsageError


def concordance_error(risk_scores, times, events) -> float:
    """One minus Harrell's C.

    A pair (i, j) is comparable when ``T_i < T_j`` and ``D_i = 1``; it is
    concordant when ``risk_i > risk_j``, and a risk tie counts one half.
    """
    risk = np.asarray(risk_scores, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    e = np.asarray(events)
    if not (risk.shape == t.shape == e.shape) or risk.ndim != 1:
        raise UsageError("risk_scores, times and events must have equal length")

    order = np.argsort(t, kind="stable")
    risk, t, e = risk[order], t[order], e[order]
    concordant = 0.0
    comparable = 0
    # for each event, compare against every strictly later time
    later_start = np.searchsorted(t, t, side="right")
    for i in np.flatnonzero(e == 1):
        others = risk[later_start[i]:]
        if others.size == 0:
            continue
        comparable += others.size
        concordant += np.count_nonzero(risk[i] > others) + 0.5 * np.count_nonzero(
            risk[i] == others
        )
    if comparable == 0:
        raise MetricUndefined("no comparable pairs")
    return 1.0 - concordant / comparable


def rmse_at_horizon(true_surv, pred_surv) -> float:
    """Root-mean-square difference between true and predicted S(h; x)."""
    a = np.asarray(true_surv, dtype=np.float64)
    b = np.asarray(pred_surv, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("true and predicted survival vectors must have equal length")
    if a.size == 0:
        raise UsageError("rmse needs at least one sample")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True, eq=False)
class PairedErrorSummary:
    deltas: np.ndarray
    median: float
    q1: float
    q3: float

    @property
    def median_abs(self) -> float:
        return float(np.median(np.abs(self.deltas)))

    @classmethod
    def from_deltas(cls, deltas) -> "PairedErrorSummary":
        d = np.asarray(deltas, dtype=np.float64)
        if d.size == 0:
            raise UsageError("no deltas to summarize")
        q1, med, q3 = np.percentile(d, [25, 50, 75])
        return cls(d, float(med), float(q1), float(q3))


def paired_delta(run_a, run_b) -> PairedErrorSummary:
    """Elementwise ``run_a - run_b`` with median and quartiles."""
    a = np.asarray(run_a, dtype=np.float64)
    b = np.asarray(run_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("paired runs must have equal length")
    return PairedErrorSummary.from_deltas(a - b)
