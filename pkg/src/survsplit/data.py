"""Dataset containers, node views and CSV ingestion."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError, UsageError


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Right-censored outcomes with a covariate matrix.

    Covariates are held column-major (Fortran order) so that a single
    feature is contiguous in memory. Arrays are made read-only on
    construction.
    """

    covariates: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.asfortranarray(np.asarray(self.covariates, dtype=np.float64))
        if X.ndim == 1:
            X = np.asfortranarray(X.reshape(-1, 1))
        if X.ndim != 2:
            raise UsageError("covariates must be a 2-d matrix")
        t = np.ascontiguousarray(np.asarray(self.times, dtype=np.float64))
        e_raw = np.asarray(self.events)
        n, p = X.shape
        if n < 1 or p < 1:
            raise UsageError(f"dataset needs n >= 1 and p >= 1, got n={n}, p={p}")
        if t.shape != (n,) or e_raw.shape != (n,):
            raise UsageError("times and events must have one entry per row")
        if not np.all(np.isfinite(X)):
            raise UsageError("covariates must be finite (missing values are not supported)")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise UsageError("times must be finite and non-negative")
        if not np.all((e_raw == 0) | (e_raw == 1)):
            raise UsageError("events must be 0 or 1")
        e = np.ascontiguousarray(e_raw, dtype=np.int64)
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise UsageError("feature_names length must match the number of columns")
        for arr in (X, t, e):
            arr.flags.writeable = False
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", e)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    @cached_property
    def time_ranks(self) -> np.ndarray:
        """Dense ranks of the observed times (ties share a rank)."""
        _, inv = np.unique(self.times, return_inverse=True)
        return np.ascontiguousarray(inv.astype(np.int64))

    @cached_property
    def failure_times(self) -> np.ndarray:
        """Sorted distinct times at which a failure was observed."""
        return np.unique(self.times[self.events == 1])

    @cached_property
    def fingerprint(self) -> dict:
        h = hashlib.sha256()
        h.update(np.array([self.n, self.p], dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.covariates).tobytes())
        h.update(self.times.tobytes())
        h.update(self.events.tobytes())
        return {"n": self.n, "p": self.p, "sha256": h.hexdigest()}

    def subset(self, indices) -> "SurvivalDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return SurvivalDataset(
            self.covariates[idx], self.times[idx], self.events[idx], self.feature_names
        )

    def equals(self, other: "SurvivalDataset") -> bool:
        return (
            self.covariates.shape == other.covariates.shape
            and np.array_equal(self.covariates, other.covariates)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.events, other.events)
        )


@dataclass(frozen=True, eq=False)
class NodeView:
    """A subset of dataset rows, i.e. the samples sitting in one tree node."""

    dataset: SurvivalDataset
    indices: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(np.asarray(self.indices, dtype=np.int64))
        if idx.ndim != 1:
            raise UsageError("node indices must be one-dimensional")
        if idx.size and (idx.min() < 0 or idx.max() >= self.dataset.n):
            raise UsageError("node index out of bounds")
        if np.unique(idx).size != idx.size:
            raise UsageError("node indices must be unique")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, dataset: SurvivalDataset) -> "NodeView":
        return cls(dataset, np.arange(dataset.n))

    def __len__(self) -> int:
        return self.indices.size

    @property
    def times(self) -> np.ndarray:
        return self.dataset.times[self.indices]

    @property
    def events(self) -> np.ndarray:
        return self.dataset.events[self.indices]

    def feature(self, j: int) -> np.ndarray:
        return self.dataset.covariates[self.indices, j]

    def materialize(self) -> SurvivalDataset:
        return self.dataset.subset(self.indices)


@dataclass(frozen=True)
class SplitResult:
    """Best split of a node: rows with ``x[feature] <= threshold`` go left."""

    feature: int
    threshold: float
    criterion_sq: float
    n_left: int


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric value {cell!r}", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"missing or non-finite value {cell!r}", row, column)
    return value


def load_csv(path, time_col: str = "time", event_col: str = "event") -> SurvivalDataset:
    """Read a dataset from a headed CSV file.

    Every column other than ``time_col`` and ``event_col`` becomes a covariate,
    in file order. Row numbers in error messages count the header as row 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        for col in (time_col, event_col):
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names")
        t_pos = header.index(time_col)
        e_pos = header.index(event_col)
        x_pos = [j for j in range(len(header)) if j not in (t_pos, e_pos)]
        if not x_pos:
            raise SchemaError(f"{path}: no covariate columns")

        X, T, E = [], [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(row)}", row_no)
            ev = row[e_pos].strip()
            if ev not in ("0", "1"):
                raise ParseError(f"event must be 0 or 1, got {ev!r}", row_no, event_col)
            t = _parse_float(row[t_pos].strip(), row_no, time_col)
            if t < 0:
                raise ParseError(f"negative time {t}", row_no, time_col)
            X.append([_parse_float(row[j].strip(), row_no, header[j]) for j in x_pos])
            T.append(t)
            E.append(int(ev))
    if not T:
        raise SchemaError(f"{path}: no data rows")
    return SurvivalDataset(
        np.array(X, dtype=np.float64),
        np.array(T, dtype=np.float64),
        np.array(E, dtype=np.int64),
        tuple(header[j] for j in x_pos),
    )


def load_covariates_csv(path, drop=()) -> tuple[np.ndarray, tuple[str, ...]]:
    """Read a headed numeric CSV, ignoring the columns named in ``drop``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        keep = [j for j, h in enumerate(header) if h not in drop]
        rows = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(row)}", row_no)
            rows.append([_parse_float(row[j].strip(), row_no, header[j]) for j in keep])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(keep))
    return X, tuple(header[j] for j in keep)


def format_csv(
    data: SurvivalDataset, time_col: str = "time", event_col: str = "event"
) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*data.feature_names, time_col, event_col])
    X = data.covariates
    for i in range(data.n):
        # repr() of a Python float round-trips exactly
        writer.writerow(
            [repr(float(v)) for v in X[i]] + [repr(float(data.times[i])), int(data.events[i])]
        )
    return buf.getvalue()


def write_csv(
    data: SurvivalDataset, path, time_col: str = "time", event_col: str = "event"
) -> None:
    atomic_write_text(path, format_csv(data, time_col, event_col))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file and rename.

    A failed write never leaves a partial file behind.
    """
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
