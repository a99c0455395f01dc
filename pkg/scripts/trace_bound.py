"""Monte Carlo check of the rank-k trace bound over a grid of (r, eps).

    python3 scripts/trace_bound.py --n 500 --exponent 2 --trials 100
"""

import argparse

import numpy as np

from rpcholesky.bench.experiments import verify_trace_bound
from rpcholesky.bench.generators import gen_powerlaw_psd


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    A = gen_powerlaw_psd(args.n, args.exponent, np.random.default_rng(args.seed))
    print(f"{'r':>3}{'eps':>6}{'eta':>11}{'k':>5}{'mean resid':>13}{'bound':>12}  ok")
    for r in (1, 2, 5, 10, 20):
        for eps in (0.1, 0.5, 1.0):
            rep = verify_trace_bound(r, eps, A, args.trials, args.seed)
            print(f"{r:>3}{eps:>6}{rep['eta']:>11.3e}{rep['k']:>5}"
                  f"{rep['mean_residual_trace']:>13.4e}{rep['bound']:>12.4e}  {rep['passed']}")


if __name__ == "__main__":
    main()
