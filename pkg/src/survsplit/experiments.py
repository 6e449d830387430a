"""Paired accuracy comparisons of exact and fast splitting forests."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .data import SurvivalDataset, atomic_write_text
from .errors import TrainingError, UsageError
from .forest import ForestParams, oob_risk_scores, predict_oob, train
from .metrics import PairedErrorSummary, concordance_error, rmse_at_horizon
from .simgen import PHConfig, gen_ph

DEFAULT_REPS = 50
RULES = ("exact", "fast")


@dataclass(eq=False)
class ParityResult:
    summary: PairedErrorSummary
    records: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(self.records[0]) if self.records else ["rep", "seed", "err_exact",
                                                             "err_approx", "delta"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for rec in self.records:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
        return buf.getvalue()

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv())

    def to_markdown(self, label: str) -> str:
        s = self.summary
        return (
            f"| metric | reps | median delta | Q1 | Q3 | median abs delta |\n"
            f"|---|---:|---:|---:|---:|---:|\n"
            f"| {label} | {s.deltas.size} | {s.median:.3e} | {s.q1:.3e} | {s.q3:.3e} "
            f"| {s.median_abs:.3e} |\n"
        )


def _check(reps, rules):
    if reps < 1:
        raise UsageError("reps must be >= 1")
    if len(rules) != 2 or any(r not in RULES for r in rules):
        raise UsageError(f"rules must be two of {RULES}")


def _pair(data, params, seed, rules):
    models = [train(data, params.with_seed(seed).with_rule(rule)) for rule in rules]
    if models[0].fingerprint != models[1].fingerprint:
        raise RuntimeError("paired arms saw different datasets")
    return models


def oob_concordance_error(model, data: SurvivalDataset) -> float:
    risk, absent = oob_risk_scores(model, data)
    keep = ~absent
    return concordance_error(risk[keep], data.times[keep], data.events[keep])


def run_concordance_parity(data: SurvivalDataset, reps: int = DEFAULT_REPS,
                           params: ForestParams | None = None, rules=RULES) -> ParityResult:
    """Per repetition ``r`` train both arms with seed ``base + r`` and record
    OOB concordance error of each and their difference (first minus second)."""
    _check(reps, rules)
    if data.n_events == 0:
        raise TrainingError("dataset has no events")
    params = params or ForestParams()
    base = params.tree.rng_seed
    records = []
    for r in range(reps):
        seed = base + r
        a, b = _pair(data, params, seed, rules)
        ea, eb = oob_concordance_error(a, data), oob_concordance_error(b, data)
        records.append({"rep": r, "seed": seed, "err_exact": ea, "err_approx": eb,
                        "delta": ea - eb})
    return ParityResult(PairedErrorSummary.from_deltas([x["delta"] for x in records]), records)


def oob_horizon_rmse(model, data: SurvivalDataset, truth, horizon: float) -> float:
    pred = predict_oob(model, data, horizon=horizon)
    keep = ~pred.absent
    return rmse_at_horizon(np.asarray(truth)[keep], pred.values[keep, 0])


def run_rmse_parity(cfg: PHConfig, reps: int = DEFAULT_REPS,
                    params: ForestParams | None = None, rules=RULES) -> ParityResult:
    """Per repetition draw a fresh PH dataset (seed ``cfg.seed + r``), train
    both arms, and compare OOB RMSE of S(horizon; x) against the analytic truth.

    Each record also carries the RMSE of the constant predictor ``mean(S)``.
    """
    _check(reps, rules)
    params = params or ForestParams()
    base = params.tree.rng_seed
    records = []
    for r in range(reps):
        data, truth = gen_ph(replace(cfg, seed=cfg.seed + r))
        seed = base + r
        a, b = _pair(data, params, seed, rules)
        ea = oob_horizon_rmse(a, data, truth, cfg.horizon)
        eb = oob_horizon_rmse(b, data, truth, cfg.horizon)
        baseline = rmse_at_horizon(truth, np.full_like(truth, truth.mean()))
        records.append({"rep": r, "seed": seed, "err_exact": ea, "err_approx": eb,
                        "delta": ea - eb, "baseline": baseline})
    return ParityResult(PairedErrorSummary.from_deltas([x["delta"] for x in records]), records)
