"""Error curves of greedy pivoting and RPCholesky on the greedy worst case.

Greedy clears the identity block one pivot at a time, then jumps to zero
error once it takes the all-ones block.  RPCholesky finds that block within
a couple of steps on average.

    python3 scripts/greedy_worstcase.py --n 400 --eta 0.1 --eps 1
"""

import argparse

import numpy as np

from rpcholesky.baselines import greedy_pivots
from rpcholesky.bench.generators import gen_greedy_worstcase
from rpcholesky.core import rpcholesky


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    A = gen_greedy_worstcase(args.n, args.eta, args.eps)
    tr = np.trace(A)
    kmax = args.n // 4
    g = np.array(greedy_pivots(A, kmax)[1].residual_trace_history) / tr
    curves = []
    for t in range(args.trials):
        h = np.array(rpcholesky(A, kmax, np.random.default_rng([args.seed, t]))[1]
                     .residual_trace_history) / tr
        curves.append(np.pad(h, (0, kmax + 1 - len(h)), mode="edge"))
    rpc = np.mean(curves, axis=0)
    target = (1 + args.eps) * args.eta
    print(f"target (1+eps) eta = {target:.3f}")
    print(f"{'k':>4}{'greedy':>12}{'rpcholesky':>12}")
    for k in (1, 2, 5, 10, 20, 30, 39, 40, 41, 60, 80, kmax):
        if k <= kmax:
            gk = g[min(k, len(g) - 1)]
            print(f"{k:>4}{gk:>12.4e}{rpc[k]:>12.4e}")


if __name__ == "__main__":
    main()
