"""Run one or more comparison configs and print mean errors per (strategy, k).

    python3 scripts/run_comparison.py configs/smile.yaml configs/outliers.yaml --seed 0
"""

import argparse
from collections import defaultdict

import numpy as np

from rpcholesky.bench import experiments as ex


def summarize(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[(r.strategy, r.k)].append(r)
    print(f"{'strategy':<18}{'k':>5}{'rel trace err':>16}{'entry evals':>14}{'task metric':>14}")
    for (strategy, k), rs in groups.items():
        err = np.mean([r.rel_trace_error for r in rs])
        evals = np.mean([r.entry_evals for r in rs])
        extras = [r.extra for r in rs if r.extra is not None]
        extra = f"{np.mean(extras):14.3e}" if extras else f"{'-':>14}"
        print(f"{strategy:<18}{k:>5}{err:16.3e}{evals:14.0f}{extra}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("configs", nargs="+")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    args = p.parse_args()
    for path in args.configs:
        cfg = ex.load_config(path, seed=args.seed, trials=args.trials, workers=args.workers)
        rows = ex.run_comparison(cfg)
        print(f"\n== {cfg.experiment} ({cfg.trials} trials, seed {cfg.seed}) -> {cfg.output}")
        summarize(rows)


if __name__ == "__main__":
    main()
