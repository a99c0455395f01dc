"""Command-line entry point: ``rpcholesky <subcommand> ...``.

Subcommands
-----------
factorize  matrix or dataset CSV -> factor (.npz) and pivot trace (JSON)
compare    YAML experiment config -> results CSV
krr        train/test CSV (last column is the target) -> SMAPE report
cluster    dataset CSV -> labels CSV, clustering error against a reference
verify     Monte Carlo / exactness checks of the error bounds
gen        synthetic datasets and test matrices -> CSV
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import modelio
from ..clustering import clustering_error, spectral_cluster
from ..core import StopRule, rpcholesky
from ..krr import krr_fit, krr_predict, smape
from ..linalg import relative_trace_error
from ..oracle import Dataset, EntryOracle, KernelSpec, load_dataset_csv, save_dataset_csv
from ..strategies import STRATEGIES, select_pivots
from ..baselines import greedy_pivots
from . import experiments as ex
from . import generators as gen


def _add_kernel_args(p, bandwidth=1.0):
    p.add_argument("--kernel", choices=["gaussian", "laplace_l1"], default="gaussian")
    p.add_argument("--bandwidth", type=float, default=bandwidth)


def _add_strategy_args(p):
    p.add_argument("--strategy", choices=STRATEGIES, default="rpcholesky")
    p.add_argument("--block-size", type=int, default=10)


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, default=float)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_factorize(args):
    if (args.matrix is None) == (args.data is None):
        raise ValueError("give exactly one of --matrix and --data")
    if args.matrix is not None:
        oracle = EntryOracle.from_matrix(np.loadtxt(args.matrix, delimiter=",", ndmin=2))
    else:
        kernel = KernelSpec(args.kernel, args.bandwidth)
        oracle = EntryOracle.from_kernel(kernel, load_dataset_csv(args.data))
    if (args.rank is None) == (args.tol is None):
        raise ValueError("give exactly one of --rank and --tol")
    rng = np.random.default_rng(args.seed)
    if args.tol is not None:
        stop = StopRule.tolerance(args.tol)
        if args.strategy == "rpcholesky":
            factor, trace = rpcholesky(oracle, stop, rng)
        elif args.strategy == "greedy":
            factor, trace = greedy_pivots(oracle, stop)
        else:
            raise ValueError("--tol is supported for rpcholesky and greedy only")
    else:
        factor, trace = select_pivots(oracle, args.strategy, args.rank, rng,
                                      block_size=args.block_size)
    modelio.save_factor(args.out, factor)
    report = {
        "strategy": args.strategy,
        "n": oracle.dim,
        "rank": factor.rank,
        "pivots": [int(s) for s in factor.pivots],
        "entry_evals": trace.entry_evals,
        "rejected_pivots": trace.rejected_pivots,
        "relative_trace_error": relative_trace_error(oracle.trace(), factor),
        "residual_trace_history": trace.residual_trace_history,
    }
    _dump(report, args.trace_out)


def cmd_compare(args):
    config = ex.load_config(args.config, seed=args.seed, trials=args.trials, output=args.output,
                            workers=args.workers)
    if args.timing:
        config.timing = True
    rows = ex.run_comparison(config)
    if not config.output:
        sys.stdout.write(ex.rows_to_csv(rows))


def _xy(path):
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    if raw.shape[1] < 2:
        raise ValueError(f"{path}: need at least one feature column and a target column")
    return Dataset(raw[:, :-1]), raw[:, -1]


def cmd_krr(args):
    train, y = _xy(args.train)
    test, y_test = _xy(args.test)
    model = krr_fit(train, y, KernelSpec(args.kernel, args.bandwidth), args.rank, args.lam,
                    args.strategy, np.random.default_rng(args.seed),
                    block_size=args.block_size)
    pred = krr_predict(model, test)
    if args.model_out:
        modelio.save_model(args.model_out, model)
    _dump({
        "strategy": args.strategy,
        "rank": len(model.pivots),
        "lam": args.lam,
        "n_train": train.n,
        "n_test": test.n,
        "entry_evals": model.entry_evals,
        "smape": smape(y_test, pred),
    })


def cmd_cluster(args):
    data = load_dataset_csv(args.data)
    model = spectral_cluster(data, KernelSpec(args.kernel, args.bandwidth), args.rank, args.m,
                             args.c, args.strategy, np.random.default_rng(args.seed),
                             restarts=args.restarts, block_size=args.block_size)
    if args.labels_out:
        np.savetxt(args.labels_out, model.labels, fmt="%d")
    if args.model_out:
        modelio.save_model(args.model_out, model)
    report = {"strategy": args.strategy, "rank": args.rank, "m": args.m, "c": args.c,
              "cluster_sizes": np.bincount(model.labels, minlength=args.c).tolist()}
    if args.reference:
        ref = np.loadtxt(args.reference, dtype=int, ndmin=1)
        report["clustering_error"] = clustering_error(model.labels, ref, args.c)
    _dump(report)


def cmd_verify(args):
    suites = ["trace-bound", "exactness", "greedy", "expected-residual"]
    chosen = suites if args.suite == "all" else [args.suite]
    reports = []
    for suite in chosen:
        if suite == "trace-bound":
            A = gen.gen_powerlaw_psd(args.n, args.exponent, np.random.default_rng(args.seed))
            reports.append(ex.verify_trace_bound(args.r, args.eps, A, args.trials, args.seed))
        elif suite == "exactness":
            rng = np.random.default_rng(args.seed)
            G = rng.standard_normal((args.n, args.r))
            reports.append(ex.verify_exactness(G @ G.T, args.r, min(args.trials, 20), args.seed))
        elif suite == "greedy":
            reports.append(ex.verify_greedy_worstcase(args.greedy_n, args.eta, args.greedy_eps,
                                                      min(args.trials, 20), args.seed))
        else:
            rng = np.random.default_rng(args.seed)
            G = rng.standard_normal((5, 5))
            reports.append(ex.verify_expected_residual(G @ G.T, args.runs, args.seed))
    _dump(reports if len(reports) > 1 else reports[0])
    failed = [r["suite"] for r in reports if not r["passed"]]
    if failed:
        raise RuntimeError(f"verification failed: {', '.join(failed)}")


def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    kind = args.kind
    if kind == "smile":
        save_dataset_csv(args.out, gen.gen_smile(args.n, rng))
    elif kind == "outliers":
        save_dataset_csv(args.out, gen.gen_outliers(args.n, args.d, args.n_out, args.scale, rng))
    elif kind == "blobs":
        centers = np.array(json.loads(args.centers), dtype=float)
        X, labels = gen.gen_blobs(args.n, centers, args.spread, rng)
        save_dataset_csv(args.out, X)
        if args.labels_out:
            np.savetxt(args.labels_out, labels, fmt="%d")
    elif kind == "regression":
        X, y = gen.gen_regression(args.n, args.d, rng)
        save_dataset_csv(args.out, np.column_stack([X.points, y]))
    elif kind == "powerlaw":
        save_dataset_csv(args.out, gen.gen_powerlaw_psd(args.n, args.exponent, rng))
    elif kind == "greedy-worstcase":
        save_dataset_csv(args.out, gen.gen_greedy_worstcase(args.n, args.eta, args.eps))
    elif kind == "uniform-worstcase":
        save_dataset_csv(args.out, gen.gen_uniform_worstcase(args.m, args.r, args.delta,
                                                             args.n_total))


def build_parser():
    parser = argparse.ArgumentParser(prog="rpcholesky", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="low-rank factor of a matrix or kernel matrix")
    p.add_argument("--matrix", help="dense symmetric matrix, CSV")
    p.add_argument("--data", help="points, CSV, one per row")
    _add_kernel_args(p)
    _add_strategy_args(p)
    p.add_argument("--rank", type=int)
    p.add_argument("--tol", type=float, help="stop when residual trace <= tol * trace")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="factor output (.npz)")
    p.add_argument("--trace-out", help="pivot trace JSON (default: stdout)")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("compare", help="run a strategy comparison from a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="record wall_ms (not reproducible)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("krr", help="kernel ridge regression on Nystrom pivots")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    _add_kernel_args(p)
    _add_strategy_args(p)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_krr)

    p = sub.add_parser("cluster", help="spectral clustering on a Nystrom approximation")
    p.add_argument("--data", required=True)
    _add_kernel_args(p)
    _add_strategy_args(p)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--m", type=int, default=3, help="eigenvectors kept (default 3)")
    p.add_argument("--c", type=int, default=4, help="clusters (default 4)")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--reference", help="reference labels, one integer per line")
    p.add_argument("--labels-out")
    p.add_argument("--model-out")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("verify", help="check error bounds numerically")
    p.add_argument("--suite", choices=["trace-bound", "exactness", "greedy", "expected-residual",
                                       "all"], default="all")
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--greedy-n", type=int, default=400)
    p.add_argument("--greedy-eps", type=float, default=1.0)
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a synthetic dataset or matrix as CSV")
    p.add_argument("kind", choices=["smile", "outliers", "blobs", "regression", "powerlaw",
                                    "greedy-worstcase", "uniform-worstcase"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--n-out", type=int, default=50)
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--centers", default="[[0,0],[10,0],[0,10],[10,10]]")
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--labels-out")
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--n-total", type=int)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"rpcholesky {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
