"""Survival forest training, prediction and model files."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .data import SurvivalDataset, atomic_write_text
from .errors import ModelFormatError, TrainingError, UsageError
from .estimators import StepCurve
from .tree import SurvivalTree, TreeParams, grow_tree

MODEL_VERSION = 1


def resolve_threads(num_threads) -> int:
    if num_threads in (None, "auto"):
        env = os.environ.get("SURVSPLIT_THREADS")
        if env:
            return resolve_threads(int(env))
        return os.cpu_count() or 1
    num_threads = int(num_threads)
    if num_threads < 1:
        raise UsageError("num_threads must be >= 1")
    return num_threads


@dataclass(frozen=True)
class ForestParams:
    num_trees: int = 500
    sample_fraction: float = 0.5
    tree: TreeParams = field(default_factory=TreeParams)
    num_threads: int | str = "auto"

    def __post_init__(self):
        if self.num_trees < 1:
            raise UsageError("num_trees must be >= 1")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise UsageError("sample_fraction must lie in (0, 1]")

    def with_seed(self, seed: int) -> "ForestParams":
        return replace(self, tree=replace(self.tree, rng_seed=seed))

    def with_rule(self, rule: str) -> "ForestParams":
        return replace(self, tree=replace(self.tree, split_rule=rule))

    def to_dict(self) -> dict:
        # thread count is an execution setting and stays out of model files
        return {
            "num_trees": self.num_trees,
            "sample_fraction": self.sample_fraction,
            "tree": self.tree.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestParams":
        return cls(d["num_trees"], d["sample_fraction"], TreeParams(**d["tree"]), 1)


@dataclass(eq=False)
class ForestModel:
    trees: list
    inbag: list
    global_grid: np.ndarray
    params: ForestParams
    fingerprint: dict
    train_times: np.ndarray
    train_events: np.ndarray

    @property
    def n_features(self) -> int:
        return self.fingerprint["p"]

    @property
    def n_train(self) -> int:
        return self.fingerprint["n"]


def subsample(n: int, fraction: float, seed: int, tree_index: int) -> np.ndarray:
    size = math.ceil(fraction * n)
    rng = np.random.default_rng([seed, tree_index])
    return np.sort(rng.choice(n, size=size, replace=False))


def train(data: SurvivalDataset, params: ForestParams) -> ForestModel:
    """Grow ``num_trees`` trees on subsamples drawn without replacement.

    Tree ``t`` uses seed ``rng_seed + t``; results do not depend on the
    number of worker threads.
    """
    if data.n_events == 0:
        raise TrainingError("training data contains no events")
    seed = params.tree.rng_seed

    def grow(t):
        inbag = subsample(data.n, params.sample_fraction, seed, t)
        tp = replace(params.tree, rng_seed=(seed + t) % 2**64)
        return grow_tree(data, inbag, tp), inbag

    threads = min(resolve_threads(params.num_threads), params.num_trees)
    if threads == 1:
        grown = [grow(t) for t in range(params.num_trees)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            grown = list(pool.map(grow, range(params.num_trees)))
    return ForestModel(
        trees=[g[0] for g in grown],
        inbag=[g[1] for g in grown],
        global_grid=data.failure_times.copy(),
        params=params,
        fingerprint=dict(data.fingerprint),
        train_times=data.times.copy(),
        train_events=data.events.copy(),
    )


def leaf_values(model: ForestModel, tree: SurvivalTree, grid, chf=False) -> np.ndarray:
    """Per-node curves of ``tree`` on ``grid`` (rows of internal nodes are zero)."""
    return K.leaf_curves_kernel(tree.leaf_ptr, tree.samples, model.train_times,
                                model.train_events, np.ascontiguousarray(grid, dtype=np.float64),
                                chf)


def _check_X(model, X):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != model.n_features:
        raise UsageError(f"expected {model.n_features} covariates, got {X.shape[1]}")
    return X


def _grid(model, horizon):
    if horizon is None:
        return model.global_grid
    return np.atleast_1d(np.asarray(horizon, dtype=np.float64))


def predict_values(model: ForestModel, X, horizon=None, chf=False) -> np.ndarray:
    """Ensemble curves for each row of ``X``: shape (rows, grid points).

    The grid is the training failure-time grid, or the given horizon(s).
    """
    X = _check_X(model, X)
    grid = _grid(model, horizon)
    rows = np.arange(X.shape[0])
    out = np.zeros((X.shape[0], grid.size))
    for tree in model.trees:
        out += leaf_values(model, tree, grid, chf)[tree.apply(X, rows)]
    return out / len(model.trees)


def predict_curve(model: ForestModel, x) -> StepCurve:
    """Mean of the leaf Kaplan-Meier curves reached by ``x`` across trees."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise UsageError("predict_curve takes a single covariate vector")
    values = predict_values(model, x[None, :])[0]
    return StepCurve(model.global_grid, values, "survival")


def risk_scores(model: ForestModel, X) -> np.ndarray:
    """Ensemble cumulative hazard summed over the training failure-time grid."""
    X = _check_X(model, X)
    rows = np.arange(X.shape[0])
    out = np.zeros(X.shape[0])
    for tree in model.trees:
        out += _leaf_risk(model, tree)[tree.apply(X, rows), 0]
    return out / len(model.trees)


@dataclass(eq=False)
class OOBPrediction:
    """Out-of-bag ensemble values; rows with ``counts == 0`` are absent (NaN)."""

    grid: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    kind: str = "survival"

    @property
    def absent(self) -> np.ndarray:
        return self.counts == 0

    def curve(self, i: int) -> StepCurve | None:
        if self.counts[i] == 0:
            return None
        return StepCurve(self.grid, self.values[i], self.kind)

    def curves(self) -> list:
        return [self.curve(i) for i in range(self.values.shape[0])]


def _oob_aggregate(model, data, width, leaf_fn, on_use=None):
    if dict(data.fingerprint) != model.fingerprint:
        raise UsageError("dataset does not match the model's training data")
    X = np.ascontiguousarray(data.covariates)
    out = np.zeros((data.n, width))
    counts = np.zeros(data.n, dtype=np.int64)
    for t, (tree, inbag) in enumerate(zip(model.trees, model.inbag)):
        mask = np.ones(data.n, dtype=bool)
        mask[inbag] = False
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            continue
        if on_use is not None:
            on_use(t, rows)
        out[rows] += leaf_fn(tree)[tree.apply(X, rows)]
        counts[rows] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        values = out / counts[:, None]
    values[counts == 0] = np.nan
    return values, counts


def predict_oob(model: ForestModel, data: SurvivalDataset, horizon=None, chf=False,
                on_use=None) -> OOBPrediction:
    """Out-of-bag predictions for the training data.

    Sample ``i`` is averaged over the trees whose subsample excluded it.
    ``on_use(tree_index, rows)``, when given, is called with the rows each
    tree contributes to.
    """
    grid = _grid(model, horizon)
    values, counts = _oob_aggregate(
        model, data, grid.size, lambda tree: leaf_values(model, tree, grid, chf), on_use
    )
    return OOBPrediction(grid, values, counts, "chf" if chf else "survival")


def _leaf_risk(model, tree):
    return K.leaf_chf_sums_kernel(tree.leaf_ptr, tree.samples, model.train_times,
                                  model.train_events, model.global_grid)


def oob_risk_scores(model: ForestModel, data: SurvivalDataset):
    """OOB risk scores (see ``risk_scores``) and the absent-prediction mask."""
    values, counts = _oob_aggregate(model, data, 1, lambda tree: _leaf_risk(model, tree))
    return values[:, 0], counts == 0


def model_to_json(model: ForestModel) -> str:
    payload = {
        "version": MODEL_VERSION,
        "params": model.params.to_dict(),
        "global_grid": [float(v) for v in model.global_grid],
        "fingerprint": model.fingerprint,
        "outcomes": {
            "times": [float(v) for v in model.train_times],
            "events": [int(v) for v in model.train_events],
        },
        "trees": [
            {"nodes": tree.to_nodes(), "inbag": [int(i) for i in inbag]}
            for tree, inbag in zip(model.trees, model.inbag)
        ],
    }
    return json.dumps(payload, separators=(",", ":"), allow_nan=False)


def model_from_json(text: str) -> ForestModel:
    try:
        payload = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model payload: {exc}") from None
    if not isinstance(payload, dict):
        raise ModelFormatError("corrupt model payload: not an object")
    if payload.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"model version mismatch: file has {payload.get('version')!r}, "
            f"expected {MODEL_VERSION}"
        )
    try:
        return ForestModel(
            trees=[SurvivalTree.from_nodes(t["nodes"]) for t in payload["trees"]],
            inbag=[np.asarray(t["inbag"], dtype=np.int64) for t in payload["trees"]],
            global_grid=np.asarray(payload["global_grid"], dtype=np.float64),
            params=ForestParams.from_dict(payload["params"]),
            fingerprint=dict(payload["fingerprint"]),
            train_times=np.asarray(payload["outcomes"]["times"], dtype=np.float64),
            train_events=np.asarray(payload["outcomes"]["events"], dtype=np.int64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model payload: {exc!r}") from None


def save_model(model: ForestModel, path) -> None:
    atomic_write_text(path, model_to_json(model))


def load_model(path) -> ForestModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ModelFormatError("corrupt model payload: not UTF-8") from None
    return model_from_json(text)


def model_hash(model: ForestModel) -> str:
    return hashlib.sha256(model_to_json(model).encode()).hexdigest()
