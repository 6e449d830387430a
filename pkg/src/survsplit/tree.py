"""Single survival tree grown by recursive log-rank partitioning."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .data import SurvivalDataset
from .errors import UsageError

SPLIT_RULES = ("exact", "fast")


def default_mtry(p: int) -> int:
    return min(math.ceil(math.sqrt(p) + 20), p)


@dataclass(frozen=True)
class TreeParams:
    """Growth settings. ``mtry=None`` resolves to ``min(ceil(sqrt(p) + 20), p)``."""

    mtry: int | None = None
    min_node_size: int = 15
    min_events_per_child: int = 1
    max_depth: int | None = None
    split_rule: str = "fast"
    rng_seed: int = 42

    def __post_init__(self):
        if self.split_rule not in SPLIT_RULES:
            raise UsageError(f"split_rule must be one of {SPLIT_RULES}, got {self.split_rule!r}")
        if self.mtry is not None and self.mtry < 1:
            raise UsageError("mtry must be >= 1")
        if self.min_node_size < 1 or self.min_events_per_child < 1:
            raise UsageError("min_node_size and min_events_per_child must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise UsageError("max_depth must be >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise UsageError("rng_seed must fit in 64 unsigned bits")

    def resolve_mtry(self, p: int) -> int:
        mtry = default_mtry(p) if self.mtry is None else self.mtry
        if mtry > p:
            raise UsageError(f"mtry={mtry} exceeds the number of features p={p}")
        return mtry

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class SurvivalTree:
    """Array-backed binary tree.

    Node ``k`` is internal when ``feature[k] >= 0``; rows with
    ``x[feature[k]] <= threshold[k]`` go to ``left[k]``. Leaf samples are kept
    in CSR form: leaf ``k`` holds ``samples[leaf_ptr[k]:leaf_ptr[k + 1]]``
    (dataset row indices, ascending); internal nodes own an empty range.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_ptr: np.ndarray
    samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, k: int) -> bool:
        return self.feature[k] < 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def leaf_samples(self, k: int) -> np.ndarray:
        return self.samples[self.leaf_ptr[k]:self.leaf_ptr[k + 1]]

    def apply(self, X, rows=None) -> np.ndarray:
        """Leaf node id reached by each requested row of ``X``."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if rows is None:
            rows = np.arange(X.shape[0])
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        return K.apply_kernel(self.feature, self.threshold, self.left, self.right, X, rows)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return int(depth.max())

    def to_nodes(self) -> list:
        nodes = []
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                nodes.append({
                    "feature": int(self.feature[k]),
                    "threshold": float(self.threshold[k]),
                    "left": int(self.left[k]),
                    "right": int(self.right[k]),
                })
            else:
                nodes.append({"samples": self.leaf_samples(k).tolist()})
        return nodes

    @classmethod
    def from_nodes(cls, nodes: list) -> "SurvivalTree":
        K_ = len(nodes)
        feature = np.full(K_, -1, dtype=np.int64)
        threshold = np.zeros(K_)
        left = np.full(K_, -1, dtype=np.int64)
        right = np.full(K_, -1, dtype=np.int64)
        ptr = np.zeros(K_ + 1, dtype=np.int64)
        chunks = []
        for k, node in enumerate(nodes):
            if "samples" in node:
                s = np.asarray(node["samples"], dtype=np.int64)
                chunks.append(s)
                ptr[k + 1] = ptr[k] + s.size
            else:
                feature[k] = node["feature"]
                threshold[k] = node["threshold"]
                left[k] = node["left"]
                right[k] = node["right"]
                ptr[k + 1] = ptr[k]
        samples = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        return cls(feature, threshold, left, right, ptr, samples)

    def same_as(self, other: "SurvivalTree") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("feature", "threshold", "left", "right", "leaf_ptr", "samples")
        )


def presort(data: SurvivalDataset, sample_indices: np.ndarray) -> np.ndarray:
    """Rows 0..p-1: samples ordered by each feature; row p: ordered by time."""
    X = data.covariates
    order = np.empty((data.p + 1, sample_indices.size), dtype=np.int64)
    for j in range(data.p):
        order[j] = sample_indices[np.argsort(X[sample_indices, j], kind="stable")]
    order[data.p] = sample_indices[np.argsort(data.time_ranks[sample_indices], kind="stable")]
    return order


def grow_tree(data: SurvivalDataset, sample_indices, params: TreeParams) -> SurvivalTree:
    """Grow a tree on ``sample_indices`` of ``data``.

    A node becomes a leaf when it has no events, fewer than
    ``2 * min_node_size`` samples, reaches ``max_depth``, or admits no valid
    split among ``mtry`` features drawn without replacement. Feature draws
    come from a counter-based stream keyed by ``(rng_seed, node id)``.
    """
    idx = np.asarray(sample_indices, dtype=np.int64)
    if idx.size == 0:
        raise UsageError("grow_tree needs at least one sample")
    if idx.min() < 0 or idx.max() >= data.n or np.unique(idx).size != idx.size:
        raise UsageError("sample_indices must be unique and within the dataset")
    mtry = params.resolve_mtry(data.p)
    max_depth = -1 if params.max_depth is None else params.max_depth
    out = K.grow_kernel(
        np.ascontiguousarray(data.covariates.T),
        data.time_ranks,
        data.events,
        presort(data, idx),
        mtry,
        params.min_node_size,
        params.min_events_per_child,
        max_depth,
        params.split_rule == "fast",
        np.uint64(params.rng_seed),
    )
    feature, threshold, left, right, _crit, ptr, samples = out
    return SurvivalTree(feature, threshold, left, right, ptr, samples)
