"""Split scanners for one feature of one node.

Two rules are available:

* ``scan_exact`` evaluates the log-rank statistic with its hypergeometric
  variance, rebuilding the sums over all M failure times at each candidate
  (O(nM) per feature).
* ``scan_fast`` keeps a running numerator ``sum_{i in L} (D_i - gamma_i)`` and
  running expected left failures ``E1``; the variance is replaced by
  ``(1/E1 + 1/E2)^-1``, so every candidate costs O(1).

Candidates sit between consecutive distinct feature values; equal values
always travel together. At equal scores the first (smallest) threshold wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .data import NodeView, SplitResult
from .errors import NoValidSplit, UsageError
from .timegrid import NodeTimeGrid

FAST_EPS = K.FAST_EPS


@dataclass(frozen=True)
class SplitConstraints:
    min_node_size: int = 1
    min_events_per_child: int = 1

    def __post_init__(self):
        if self.min_node_size < 1 or self.min_events_per_child < 1:
            raise UsageError("split constraints must be >= 1")


@dataclass(frozen=True, eq=False)
class CandidateTrace:
    """Per-boundary scan output; entry ``i`` is the split after sorted position ``i``.

    ``status`` is 0 for a tie (no candidate), 1 for a candidate that was
    skipped, 2 for a scored candidate. For the exact rule ``denominator`` is
    the hypergeometric variance; for the fast rule it is ``E1``.
    """

    thresholds: np.ndarray
    n_left: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    criterion_sq: np.ndarray
    status: np.ndarray

    @property
    def is_candidate(self) -> np.ndarray:
        return self.status != K.TIE

    @property
    def is_valid(self) -> np.ndarray:
        return self.status == K.VALID


def sort_feature(node: NodeView, feature: int) -> tuple[np.ndarray, np.ndarray]:
    """Feature values of the node in ascending order, with node-local positions."""
    x = node.feature(feature)
    pos = np.argsort(x, kind="stable")
    return np.ascontiguousarray(x[pos]), pos.astype(np.int64)


def _check(values, positions, grid):
    values = np.ascontiguousarray(values, dtype=np.float64)
    positions = np.ascontiguousarray(positions, dtype=np.int64)
    if values.shape != positions.shape or values.ndim != 1:
        raise UsageError("values and positions must be 1-d of equal length")
    if values.size and np.any(np.diff(values) < 0):
        raise UsageError("feature values must be sorted ascending")
    if positions.size and (positions.min() < 0 or positions.max() >= grid.n):
        raise UsageError("positions must index the grid's samples")
    return values, positions


def _thresholds(values):
    lo, hi = values[:-1], values[1:]
    mid = 0.5 * lo + 0.5 * hi
    bad = ~((lo <= mid) & (mid < hi))
    mid[bad] = lo[bad]
    return mid


def _result(values, feature, pos, value):
    if pos < 0:
        raise NoValidSplit("no candidate split satisfies the constraints")
    return SplitResult(
        feature=feature,
        threshold=float(K.midpoint(values[pos - 1], values[pos])),
        criterion_sq=float(value),
        n_left=int(pos),
    )


def _exact_args(values, positions, grid):
    return (
        values,
        grid.events[positions],
        grid.sample_grid_index[positions],
        grid.d.astype(np.float64),
        grid.Y.astype(np.float64),
        grid.alpha,
        grid.beta,
    )


def scan_exact(values, positions, grid: NodeTimeGrid,
               constraints: SplitConstraints | None = None, feature: int = 0) -> SplitResult:
    """Best split of one feature under the exact log-rank statistic.

    Parameters
    ----------
    values : array
        Feature values of the node's samples, sorted ascending.
    positions : array of int
        Node-local sample position for each entry of ``values``.
    grid : NodeTimeGrid
        Grid built for the same node.

    Raises
    ------
    NoValidSplit
        If no candidate survives ties, constraints and the zero-variance check.
    """
    c = constraints or SplitConstraints()
    values, positions = _check(values, positions, grid)
    empty_f, empty_i = np.empty(0), np.empty(0, np.int64)
    pos, best = K.scan_exact_core(*_exact_args(values, positions, grid),
                                  c.min_node_size, c.min_events_per_child,
                                  empty_f, empty_f, empty_i)
    return _result(values, feature, pos, best)


def scan_fast(values, positions, grid: NodeTimeGrid,
              constraints: SplitConstraints | None = None, feature: int = 0) -> SplitResult:
    """Best split of one feature under the Poissonized (fast) criterion.

    Candidates where either side expects at most ``FAST_EPS`` failures are
    skipped.
    """
    c = constraints or SplitConstraints()
    values, positions = _check(values, positions, grid)
    empty_f, empty_i = np.empty(0), np.empty(0, np.int64)
    pos, best = K.scan_fast_core(values, grid.events[positions], grid.gamma[positions],
                                 grid.gamma_bar, c.min_node_size, c.min_events_per_child,
                                 empty_f, empty_f, empty_i)
    return _result(values, feature, pos, best)


def exact_candidates(values, positions, grid: NodeTimeGrid,
                     constraints: SplitConstraints | None = None) -> CandidateTrace:
    c = constraints or SplitConstraints()
    values, positions = _check(values, positions, grid)
    m = max(values.size - 1, 0)
    num, den, status = np.full(m, np.nan), np.full(m, np.nan), np.zeros(m, np.int64)
    K.scan_exact_core(*_exact_args(values, positions, grid),
                      c.min_node_size, c.min_events_per_child, num, den, status)
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = np.where(status == K.VALID, num * num / den, np.nan)
    return CandidateTrace(_thresholds(values), np.arange(1, m + 1), num, den, crit, status)


def fast_candidates(values, positions, grid: NodeTimeGrid,
                    constraints: SplitConstraints | None = None) -> CandidateTrace:
    c = constraints or SplitConstraints()
    values, positions = _check(values, positions, grid)
    m = max(values.size - 1, 0)
    num, e1, status = np.full(m, np.nan), np.full(m, np.nan), np.zeros(m, np.int64)
    K.scan_fast_core(values, grid.events[positions], grid.gamma[positions], grid.gamma_bar,
                     c.min_node_size, c.min_events_per_child, num, e1, status)
    e2 = grid.gamma_bar - e1
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = np.where(status == K.VALID, num * num * (1.0 / e1 + 1.0 / e2), np.nan)
    return CandidateTrace(_thresholds(values), np.arange(1, m + 1), num, e1, crit, status)


def fast_numerator(node: NodeView, grid: NodeTimeGrid, left_mask) -> float:
    """``sum_{i in L} (D_i - gamma_i)`` for the left set given as a boolean mask
    over the node's samples."""
    mask = np.asarray(left_mask, dtype=bool)
    if mask.shape != (len(node),):
        raise UsageError("left_mask must have one entry per node sample")
    return float(np.sum(grid.events[mask] - grid.gamma[mask]))


def best_split(node: NodeView, grid: NodeTimeGrid, features, rule: str = "fast",
               constraints: SplitConstraints | None = None) -> SplitResult:
    """Scan several features and keep the best split (earlier feature wins ties)."""
    scan = {"exact": scan_exact, "fast": scan_fast}[rule]
    best = None
    for f in features:
        values, positions = sort_feature(node, f)
        try:
            res = scan(values, positions, grid, constraints, feature=int(f))
        except NoValidSplit:
            continue
        if best is None or res.criterion_sq > best.criterion_sq:
            best = res
    if best is None:
        raise NoValidSplit("no feature yields a valid split")
    return best
