"""Single-tree timing harness: exact vs. fast log-rank splitting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError
from .simgen import PoissonBenchConfig, gen_poisson_bench
from .tree import SurvivalTree, TreeParams, grow_tree

TABLE_COLUMNS = ("n", "p", "M", "runtime_exact_s", "runtime_approx_s", "speedup")
FULL_GRID_CELLS = [
    (n, p, m) for m in (20, 130, 260, 500) for p in (25, 50) for n in (20_000, 50_000)
]
QUICK_CELLS = [(20_000, 25, 20)]


@dataclass(frozen=True)
class BenchRow:
    n: int
    p: int
    M: int
    runtime_exact_s: float
    runtime_approx_s: float
    speedup: float
    repetitions: int
    median_exact_s: float = float("nan")
    median_approx_s: float = float("nan")
    target_M: int = 0
    tree_digest_exact: str = ""
    tree_digest_approx: str = ""


def tree_digest(tree: SurvivalTree) -> str:
    return hashlib.sha256(json.dumps(tree.to_nodes()).encode()).hexdigest()[:16]


def _timed_grow(data, idx, params):
    t0 = time.perf_counter()
    tree = grow_tree(data, idx, params)
    return time.perf_counter() - t0, tree


def bench_single_tree(cells, reps: int = 10, params: TreeParams | None = None,
                      seed: int = 0, num_threads: int = 1, log=None) -> list:
    """Time one tree per rule on every ``(n, p, target_M)`` cell.

    Each cell gets its own Poisson dataset. Both rules share the tree seed;
    runs are interleaved exact/fast, after one untimed warm-up per rule.
    """
    if reps < 1:
        raise UsageError("reps must be >= 1")
    if num_threads != 1:
        raise UsageError("benchmarks run single-threaded; pass num_threads=1")
    params = params or TreeParams()
    exact_p = replace(params, split_rule="exact")
    fast_p = replace(params, split_rule="fast")
    rows = []
    for n, p, target in cells:
        data = gen_poisson_bench(PoissonBenchConfig(n=n, p=p, target_M=target, seed=seed))
        idx = np.arange(data.n)
        grow_tree(data, idx, exact_p)
        grow_tree(data, idx, fast_p)
        t_exact, t_fast = [], []
        digests_exact, digests_fast = set(), set()
        for _ in range(reps):
            dt, tree = _timed_grow(data, idx, exact_p)
            t_exact.append(dt)
            digests_exact.add(tree_digest(tree))
            dt, tree = _timed_grow(data, idx, fast_p)
            t_fast.append(dt)
            digests_fast.add(tree_digest(tree))
        if len(digests_exact) != 1 or len(digests_fast) != 1:
            raise RuntimeError("tree growth is not deterministic across repetitions")
        mean_exact = statistics.fmean(t_exact)
        mean_fast = statistics.fmean(t_fast)
        row = BenchRow(
            n=n, p=p, M=int(data.failure_times.size),
            runtime_exact_s=mean_exact, runtime_approx_s=mean_fast,
            speedup=mean_exact / mean_fast, repetitions=reps,
            median_exact_s=statistics.median(t_exact),
            median_approx_s=statistics.median(t_fast),
            target_M=target,
            tree_digest_exact=digests_exact.pop(),
            tree_digest_approx=digests_fast.pop(),
        )
        if log is not None:
            log(row)
        rows.append(row)
    return rows


def emit_table(rows, fmt: str = "markdown") -> str:
    """Render rows as markdown or CSV, columns n, p, M, exact, approx, speedup."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow([r.n, r.p, r.M, repr(r.runtime_exact_s), repr(r.runtime_approx_s),
                        repr(r.speedup)])
        return buf.getvalue()
    if fmt != "markdown":
        raise UsageError(f"unknown table format {fmt!r}")
    lines = [
        "| n | p | M | Runtime: Exact (s) | Runtime: Approx (s) | Speedup (x) |",
        "|---:|---:|---:|---:|---:|---:|",
    ]
    for r in rows:
        lines.append(
            f"| {r.n} | {r.p} | {r.M} | {r.runtime_exact_s:.3f} | "
            f"{r.runtime_approx_s:.3f} | {r.speedup:.2f} |"
        )
    return "\n".join(lines) + "\n"


def parse_table_csv(text: str) -> list:
    return [
        {k: (int(v) if k in ("n", "p", "M") else float(v)) for k, v in rec.items()}
        for rec in csv.DictReader(io.StringIO(text))
    ]
