"""Command-line interface: train, predict, evaluate, bench, parity.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import experiments
from .data import atomic_write_text, load_covariates_csv, load_csv
from .errors import SurvSplitError, UsageError
from .forest import (
    ForestParams,
    load_model,
    model_hash,
    oob_risk_scores,
    predict_values,
    risk_scores,
    save_model,
    train,
)
from .metrics import concordance_error
from .simgen import PHConfig
from .tree import SPLIT_RULES, TreeParams


def _threads(value):
    if value == "auto":
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid thread count {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return n


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _int_list(value):
    try:
        return [int(v) for v in value.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--time-col", default="time")
    p.add_argument("--event-col", default="event")


def _add_forest_args(p, trees=500):
    p.add_argument("--trees", type=_positive, default=trees)
    p.add_argument("--mtry", type=_positive, default=None)
    p.add_argument("--min-node-size", type=_positive, default=15)
    p.add_argument("--sample-fraction", type=float, default=0.5)
    p.add_argument("--split-rule", choices=SPLIT_RULES, default="fast")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=_threads, default=None,
                   help="worker threads (default: $SURVSPLIT_THREADS or all cores)")


def _forest_params(args) -> ForestParams:
    return ForestParams(
        num_trees=args.trees,
        sample_fraction=args.sample_fraction,
        tree=TreeParams(mtry=args.mtry, min_node_size=args.min_node_size,
                        split_rule=args.split_rule, rng_seed=args.seed),
        num_threads="auto" if args.threads is None else args.threads,
    )


def cmd_train(args) -> int:
    data = load_csv(args.data, args.time_col, args.event_col)
    params = _forest_params(args)
    t0 = time.perf_counter()
    model = train(data, params)
    elapsed = time.perf_counter() - t0
    save_model(model, args.out)
    print(f"trained {params.num_trees} trees ({params.tree.split_rule} splits) on "
          f"n={data.n}, p={data.p} in {elapsed:.2f}s")
    print(f"model {args.out} sha256={model_hash(model)}")
    return 0


def _prediction_matrix(model, args):
    X, _ = load_covariates_csv(args.data, drop=(args.time_col, args.event_col))
    if X.shape[1] != model.n_features:
        raise UsageError(
            f"{args.data} has {X.shape[1]} covariate columns, model expects {model.n_features}"
        )
    return X


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X = _prediction_matrix(model, args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.horizon is not None:
        values = predict_values(model, X, horizon=args.horizon)
        w.writerow(["row", f"S({args.horizon!r})"])
    else:
        values = predict_values(model, X)
        w.writerow(["row"] + [f"S({float(t)!r})" for t in model.global_grid])
    for i, row in enumerate(values):
        w.writerow([i] + [repr(float(v)) for v in row])
    atomic_write_text(args.out, buf.getvalue())
    print(f"wrote {values.shape[0]} predictions to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, args.time_col, args.event_col)
    if data.fingerprint == model.fingerprint:
        risk, absent = oob_risk_scores(model, data)
        keep = ~absent
        err = concordance_error(risk[keep], data.times[keep], data.events[keep])
        print(f"OOB PE_C = {err:.6f} (n={int(keep.sum())})")
    else:
        if data.p != model.n_features:
            raise UsageError(f"data has p={data.p}, model expects {model.n_features}")
        err = concordance_error(risk_scores(model, data.covariates), data.times, data.events)
        print(f"test PE_C = {err:.6f} (n={data.n})")
    return 0


def cmd_bench(args) -> int:
    if args.quick:
        cells = bench_mod.QUICK_CELLS
    else:
        cells = [(n, p, m) for m in args.M for p in args.p for n in args.n]
    params = TreeParams(mtry=args.mtry, min_node_size=args.min_node_size, rng_seed=args.seed)

    def log(row):
        print(f"n={row.n} p={row.p} M={row.M}: exact {row.runtime_exact_s:.3f}s "
              f"approx {row.runtime_approx_s:.3f}s speedup {row.speedup:.2f}x",
              file=sys.stderr)

    rows = bench_mod.bench_single_tree(cells, reps=args.reps, params=params,
                                       seed=args.seed, num_threads=1, log=log)
    text = bench_mod.emit_table(rows, args.format)
    if args.out:
        atomic_write_text(args.out, text)
    print(text, end="")
    return 0


def cmd_parity(args) -> int:
    params = _forest_params(args)
    if args.kind == "concordance":
        if args.data:
            data = load_csv(args.data, args.time_col, args.event_col)
        else:
            from .simgen import gen_ph

            data, _ = gen_ph(PHConfig(n=args.n, p=args.p, censor_rate=args.censor_rate,
                                      horizon=args.horizon, seed=args.seed))
        result = experiments.run_concordance_parity(data, args.reps, params)
        label = "delta PE_C"
    else:
        cfg = PHConfig(n=args.n, p=args.p, censor_rate=args.censor_rate,
                       horizon=args.horizon, seed=args.seed)
        result = experiments.run_rmse_parity(cfg, args.reps, params)
        label = "delta PE_RMSE"
    if args.out:
        result.write_csv(args.out)
    if args.format == "csv":
        print(result.to_csv(), end="")
    else:
        print(result.to_markdown(label), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survsplit",
        description="Survival forests with exact or fast log-rank splitting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a forest and write a model file")
    _add_data_args(p)
    p.add_argument("--out", required=True)
    _add_forest_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict survival curves from a model")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=float, default=None,
                   help="emit only S(horizon) instead of full curves")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="concordance error of a model on a dataset")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="single-tree timing, exact vs. fast")
    p.add_argument("--quick", action="store_true", help="run only the smallest cell")
    p.add_argument("--n", type=_int_list, default=[20_000, 50_000])
    p.add_argument("--p", type=_int_list, default=[25, 50])
    p.add_argument("--M", type=_int_list, default=[20, 130, 260, 500])
    p.add_argument("--reps", type=_positive, default=10)
    p.add_argument("--mtry", type=_positive, default=None)
    p.add_argument("--min-node-size", type=_positive, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("parity", help="paired exact-vs-fast accuracy study")
    p.add_argument("--kind", choices=("concordance", "rmse"), default="concordance")
    _add_data_args(p, required=False)
    p.add_argument("--reps", type=_positive, default=experiments.DEFAULT_REPS)
    p.add_argument("--n", type=_positive, default=2000)
    p.add_argument("--p", type=_positive, default=10)
    p.add_argument("--censor-rate", type=float, default=0.3)
    p.add_argument("--horizon", type=float, default=0.5)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", default=None, help="per-repetition CSV")
    _add_forest_args(p, trees=200)
    p.set_defaults(func=cmd_parity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SurvSplitError, OSError) as exc:
        print(f"survsplit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
