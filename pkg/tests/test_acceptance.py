"""Acceptance gate: one PASS/FAIL line per criterion, printed at session end."""

import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, D1_EVENTS, D1_TIMES

from oracles import exact_terms_all, random_node
from survsplit.bench import bench_single_tree
from survsplit.data import NodeView, SurvivalDataset
from survsplit.estimators import kaplan_meier, nelson_aalen
from survsplit.experiments import run_concordance_parity, run_rmse_parity
from survsplit.forest import ForestParams, model_to_json, train
from survsplit.simgen import PHConfig, gen_ph
from survsplit.splitting import exact_candidates, fast_candidates, fast_numerator, sort_feature
from survsplit.timegrid import build_time_grid
from survsplit.tree import TreeParams

# forest settings for the paired accuracy studies
PARITY_MTRY = 4
CONCORDANCE_TREES = 200
RMSE_TREES = 100
PARITY_REPS = 50


def report(number, ok, text):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  [{number}] {text}")
    assert ok, text


def rel_close(a, b, tol=1e-9):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) <= tol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def _nodes(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        t, e, x = random_node(rng, n_max=200, m_max=50)
        data = SurvivalDataset(x, t, e)
        node = NodeView.full(data)
        out.append((t, e, x, node, build_time_grid(node)))
    return out


@pytest.fixture(scope="module")
def random_nodes():
    return _nodes(1000, seed=20240601)


def test_numerator_identity(random_nodes):
    t0 = time.perf_counter()
    checked = 0
    worst = 0.0
    for _, _, _, node, grid in random_nodes:
        v, pos = sort_feature(node, 0)
        ex = exact_candidates(v, pos, grid)
        fa = fast_candidates(v, pos, grid)
        for i in np.flatnonzero(ex.is_candidate):
            mask = np.zeros(len(node), dtype=bool)
            mask[pos[: i + 1]] = True
            fnum = fast_numerator(node, grid, mask)
            for other in (fnum, fa.numerator[i]):
                gap = abs(other - ex.numerator[i]) / max(1.0, abs(ex.numerator[i]))
                worst = max(worst, gap)
            checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    report(1, ok, f"numerator identity on 1000 nodes, {checked} candidates: "
                  f"max rel gap {worst:.2e} (<= 1e-9), {elapsed:.1f}s (< 10s)")


def test_conservation(random_nodes):
    worst = max(abs(grid.gamma_bar - int(np.sum(e))) for _, e, _, _, grid in random_nodes)
    report(2, worst <= 1e-9, f"sum of gamma equals event count on 1000 nodes: "
                             f"max gap {worst:.2e} (<= 1e-9)")


def test_exact_scanner_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    same_sets = True
    for t, e, x, node, grid in _nodes(200, seed=777):
        v, pos = sort_feature(node, 0)
        tr = exact_candidates(v, pos, grid)
        k, num, var = exact_terms_all(t, e, x)
        same_sets &= np.array_equal(k, np.flatnonzero(tr.is_candidate) + 1)
        got_num, got_var = tr.numerator[k - 1], tr.denominator[k - 1]
        for a, b in ((got_num, num), (got_var, var)):
            if a.size:
                gap = np.abs(a - b) / np.maximum(1.0, np.abs(b))
                worst = max(worst, float(gap.max()))
        valid = tr.is_valid[k - 1]
        crit = num[valid] ** 2 / var[valid]
        if crit.size:
            gap = np.abs(tr.criterion_sq[k - 1][valid] - crit) / np.maximum(1.0, crit)
            worst = max(worst, float(gap.max()))
        checked += k.size
    elapsed = time.perf_counter() - t0
    ok = same_sets and worst <= 1e-9 and elapsed < 30.0
    report(3, ok, f"exact scan vs from-scratch recount on 200 nodes, {checked} candidates: "
                  f"max rel gap {worst:.2e} (<= 1e-9), {elapsed:.1f}s (< 30s)")


@pytest.fixture(scope="module")
def bench_rows():
    rows = bench_single_tree([(20_000, 25, 20), (20_000, 25, 500)], reps=10,
                             params=TreeParams(), seed=0)
    return {r.target_M: r for r in rows}


def test_speedup(bench_rows):
    low, high = bench_rows[20], bench_rows[500]
    ok = high.speedup >= 3.0 and low.speedup >= 1.0
    report(4, ok, f"single-tree speedup n=20000 p=25 (10 reps): M={high.M}: "
                  f"{high.speedup:.2f}x (>= 3), M={low.M}: {low.speedup:.2f}x (>= 1)")


def test_fast_scan_m_independence(bench_rows):
    low, high = bench_rows[20], bench_rows[500]
    fast_ratio = high.runtime_approx_s / low.runtime_approx_s
    exact_ratio = high.runtime_exact_s / low.runtime_exact_s
    ok = fast_ratio <= 1.5 and exact_ratio >= 4.0
    report(5, ok, f"time(M=500)/time(M=20): fast {fast_ratio:.2f} (<= 1.5), "
                  f"exact {exact_ratio:.2f} (>= 4)")


def _parity_params(trees, seed=1, threads=1):
    return ForestParams(num_trees=trees, tree=TreeParams(mtry=PARITY_MTRY, rng_seed=seed),
                        num_threads=threads)


def test_concordance_parity():
    data, _ = gen_ph(PHConfig(n=2000, p=10, seed=0))
    res = run_concordance_parity(data, PARITY_REPS, _parity_params(CONCORDANCE_TREES))
    s = res.summary
    report(6, s.median_abs <= 0.01,
           f"concordance parity n=2000 p=10 {CONCORDANCE_TREES} trees {PARITY_REPS} reps: "
           f"median |dPE_C| {s.median_abs:.2e} (<= 0.01), median dPE_C {s.median:.2e} "
           f"[Q1 {s.q1:.2e}, Q3 {s.q3:.2e}]")


def test_rmse_parity():
    res = run_rmse_parity(PHConfig(n=5000, p=10, seed=0), PARITY_REPS,
                          _parity_params(RMSE_TREES))
    s = res.summary
    beats = all(r["err_exact"] < r["baseline"] and r["err_approx"] < r["baseline"]
                for r in res.records)
    med = {k: float(np.median([r[k] for r in res.records]))
           for k in ("err_exact", "err_approx", "baseline")}
    report(7, s.median_abs <= 5e-3 and beats,
           f"RMSE parity n=5000 p=10 {RMSE_TREES} trees {PARITY_REPS} reps: "
           f"median |dPE_RMSE| {s.median_abs:.2e} (<= 5e-3); both arms beat the constant "
           f"baseline in every rep: {beats} (medians exact {med['err_exact']:.4f}, "
           f"fast {med['err_approx']:.4f}, baseline {med['baseline']:.4f})")


def test_estimator_fixtures(random_nodes):
    grid = [1.0, 2.0, 3.0, 4.0]
    km = kaplan_meier(D1_TIMES, D1_EVENTS, grid).values
    na = nelson_aalen(D1_TIMES, D1_EVENTS, grid).values
    ok = bool(np.all(np.abs(km - [0.8, 0.6, 0.3, 0.0]) <= 1e-12)
              and np.all(np.abs(na - [0.2, 0.45, 0.95, 1.95]) <= 1e-12))
    worst = 0.0
    for t, e, _, _, g in random_nodes[:200]:
        worst = max(worst, float(np.abs(nelson_aalen(t, e, g.failure_times).values - g.A).max()))
    ok = ok and worst <= 1e-12
    report(8, ok, f"KM/NA on the five-sample fixture within 1e-12; NA vs cumulative alpha "
                  f"on 200 nodes max gap {worst:.1e}")


def test_determinism():
    data, _ = gen_ph(PHConfig(n=2000, p=10, seed=3))
    files = [model_to_json(train(data, _parity_params(50, seed=5, threads=k)))
             for k in (1, 4, 1, 4)]
    same_files = len(set(files)) == 1
    small, _ = gen_ph(PHConfig(n=500, p=10, seed=4))
    deltas = [
        [r["delta"] for r in run_concordance_parity(
            small, 3, _parity_params(30, seed=9, threads=k)).records]
        for k in (1, 3, 1, 3)
    ]
    same_deltas = all(d == deltas[0] for d in deltas)
    report(9, same_files and same_deltas,
           f"byte-identical model files across runs at 1 and 4 threads: {same_files}; "
           f"identical parity deltas at 1 and 3 threads: {same_deltas}")
