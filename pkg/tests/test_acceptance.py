"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line (visible with ``-s``);
the same lines are repeated in the terminal summary.  Two supplementary
checks (``7b``, ``8b``) cover the ranges where the stated criteria 7 and 8
can actually be met; they do not replace the stated ones.
"""

import math
import time

import numpy as np
import pytest

from rpcholesky.baselines import greedy_pivots, uniform_pivots
from rpcholesky.bench import experiments as ex
from rpcholesky.bench import generators as gen
from rpcholesky.clustering import clustering_error, spectral_cluster
from rpcholesky.core import nystrom_from_pivots, rpcholesky, rpcholesky_naive
from rpcholesky.krr import krr_fit, krr_predict, smape
from rpcholesky.linalg import expected_residual_map, min_eig, relative_trace_error
from rpcholesky.oracle import EntryOracle, KernelSpec

from conftest import random_psd, rel_fro

RESULTS = []


def report(tag, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  [{tag:>2}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def trial_rng(seed, t):
    return np.random.default_rng([seed, t])


def test_01_entry_count():
    X = np.random.default_rng(1).uniform(-1, 1, (1000, 3))
    o = EntryOracle.from_kernel(KernelSpec("gaussian", 1.0), X)
    t0 = time.perf_counter()
    f, tr = rpcholesky(o, 100, seed=0)
    secs = time.perf_counter() - t0
    ok = tr.rejected_pivots == 0 and f.rank == 100 and tr.entry_evals == 101000 and secs < 1.0
    report(1, "entry count (k+1)N", ok,
           f"evals={tr.entry_evals} rejected={tr.rejected_pivots} time={secs:.3f}s")


def test_02_naive_equivalence():
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(5, 201))
        rank = int(rng.integers(1, n + 1))
        A = random_psd(n, rank=rank, seed=1000 + i, decay=float(rng.choice([0.0, 1.0, 2.0])))
        k = int(rng.integers(1, min(n, 60) + 1))
        f, _ = rpcholesky(A, k, seed=i)
        approx, _, _ = rpcholesky_naive(A, k, pivots=f.pivots)
        worst = max(worst, rel_fro(f.approx(), approx))
    report(2, "naive/efficient equivalence", worst <= 1e-10, f"max rel Frobenius={worst:.2e}")


def test_03_exact_at_rank():
    worst = 0.0
    for r in (1, 5, 20):
        for seed in range(5):
            G = np.random.default_rng([r, seed]).standard_normal((300, r))
            A = G @ G.T
            f, tr = rpcholesky(A, r, seed=seed)
            worst = max(worst, tr.residual_trace / np.trace(A),
                        (np.trace(A) - f.trace()) / np.trace(A))
    report(3, "exactness at rank r", worst <= 1e-10, f"max residual/trA={worst:.2e}")


def test_04_trace_bound_desk_scale():
    A = gen.gen_powerlaw_psd(500, 2.0, seed=0)
    t0 = time.perf_counter()
    rep = ex.verify_trace_bound(5, 0.5, A, trials=100, seed=0)
    secs = time.perf_counter() - t0
    k_expected = math.ceil(5 / 0.5 + 5 * max(math.log(1 / (0.5 * rep["eta"])), 0.0))
    ok = rep["passed"] and rep["k"] == k_expected and secs < 30
    report(4, "trace bound at k from the eta branch", ok,
           f"k={rep['k']} mean={rep['mean_residual_trace']:.4g} se={rep['standard_error']:.2g} "
           f"bound={rep['bound']:.4g} time={secs:.1f}s")


def test_05_expected_residual():
    G = np.random.default_rng(5).standard_normal((5, 5))
    rep = ex.verify_expected_residual(G @ G.T, runs=100_000, seed=5)
    report(5, "mean one-step residual = A - A^2/trA", rep["passed"],
           f"max deviation={rep['max_deviation_in_se']:.2f} se")


def test_06_expected_residual_map_properties():
    rng = np.random.default_rng(6)
    worst = np.inf
    for i in range(100):
        n = int(rng.integers(2, 31))
        A = random_psd(n, rank=int(rng.integers(1, n + 1)), seed=2 * i)
        H = random_psd(n, rank=int(rng.integers(1, n + 1)), seed=2 * i + 1)
        theta = float(rng.uniform())
        scale = np.trace(A) + np.trace(H)
        checks = [
            min_eig(expected_residual_map(A)),
            min_eig(expected_residual_map(A + H) - expected_residual_map(A)),
            min_eig(expected_residual_map(theta * A + (1 - theta) * H)
                    - theta * expected_residual_map(A) - (1 - theta) * expected_residual_map(H)),
        ]
        worst = min(worst, min(c / scale for c in checks))
    report(6, "positive, monotone, concave", worst >= -1e-10, f"min eig/trace={worst:.2e}")


def test_07_greedy_worst_case():
    rep = ex.verify_greedy_worstcase(N=400, eta=0.1, eps=1.0, trials=20, seed=7)
    report(7, "greedy stuck above (1+eps)eta for all k <= (1-(1+eps)eta)N-1", rep["passed"],
           f"greedy at or below target for {rep['greedy_ranks_not_above_target']} of "
           f"{rep['k_last']} ranks (first k={rep['greedy_first_rank_not_above_target']}); "
           f"rpcholesky below target at k={rep['rpcholesky_first_k_below_target']}")


def test_07b_greedy_worst_case_provable_range():
    rep = ex.verify_greedy_worstcase(N=400, eta=0.1, eps=1.0, trials=20, seed=7)
    ok = rep["greedy_above_target_up_to_k_provable"] and \
        rep["rpcholesky_first_k_below_target"] is not None
    report("7b", "greedy stuck above target for k <= min(eta, 1-(1+eps)eta)N - 1", ok,
           f"k_provable={rep['k_provable']} "
           f"rpcholesky below target at k={rep['rpcholesky_first_k_below_target']}")


def _mean_error(oracle, method, k, trials, seed):
    tr = oracle.trace()
    return float(np.mean([relative_trace_error(tr, method(oracle, k, trial_rng(seed, t))[0])
                          for t in range(trials)]))


def _rpc(o, k, rng):
    return rpcholesky(o, k, rng)


def _unif(o, k, rng):
    return uniform_pivots(o, k, seed=rng)


def _outliers_ratio(n, bandwidth, trials, seed):
    X = gen.gen_outliers(n, 20, 50, 100.0, np.random.default_rng([seed, 2**31 - 1]))
    o = EntryOracle.from_kernel(KernelSpec("gaussian", bandwidth), X)
    # greedy is deterministic: one run is its mean
    greedy = relative_trace_error(o.trace(), greedy_pivots(o, 60)[0])
    rpc = _mean_error(o, _rpc, 60, trials, seed)
    return greedy, rpc


def test_08_smile_and_outliers():
    t0 = time.perf_counter()
    X = gen.gen_smile(2000, np.random.default_rng([8, 2**31 - 1]))
    o = EntryOracle.from_kernel(KernelSpec("gaussian", gen.SMILE_BANDWIDTH), X)
    rpc_s = _mean_error(o, _rpc, 100, 100, 8)
    uni_s = _mean_error(o, _unif, 100, 100, 8)
    greedy_o, rpc_o = _outliers_ratio(2000, gen.OUTLIERS_BANDWIDTH, 100, 8)
    secs = time.perf_counter() - t0
    ok = uni_s >= 10 * rpc_s and greedy_o >= 5 * rpc_o and secs < 300
    report(8, "smile uniform/rpc >= 10 and outliers greedy/rpc >= 5 at N=2000", ok,
           f"smile {uni_s:.3g}/{rpc_s:.3g}={uni_s / rpc_s:.1f}x, "
           f"outliers {greedy_o:.3g}/{rpc_o:.3g}={greedy_o / rpc_o:.2f}x, time={secs:.0f}s")


@pytest.mark.slow
def test_08b_outliers_full_size():
    greedy_o, rpc_o = _outliers_ratio(10**4, 15.0, 100, 8)
    report("8b", "outliers greedy/rpc >= 5 at N=10^4, bandwidth 15", greedy_o >= 5 * rpc_o,
           f"{greedy_o:.3g}/{rpc_o:.3g}={greedy_o / rpc_o:.2f}x")


def _all_pivots(oracle, k, rng):
    return nystrom_from_pivots(oracle, range(oracle.dim)), None


def test_09_krr():
    # fixtures keep cond(M) near 1e6, so that a 1e-8 gap measures the code
    # and not the conditioning of the reference solve
    worst = 0.0
    for n, family, bw, lam in [(50, "gaussian", 0.5, 1e-3), (200, "laplace_l1", 1.0, 1e-4),
                               (500, "laplace_l1", 1.0, 1e-3)]:
        X, y = gen.gen_regression(n, 3, seed=n)
        kern = KernelSpec(family, bw)
        model = krr_fit(X, y, kern, n, lam, _all_pivots)
        A = kern(X.points, X.points)
        ref = np.linalg.solve(A @ A + lam * n * A, A @ y)
        worst = max(worst, np.linalg.norm(model.coef - ref) / np.linalg.norm(ref))

    ks = (10, 20, 40, 80)
    curve = np.zeros(len(ks))
    for seed in range(20):
        X, y = gen.gen_regression(1500, 3, seed=[9, seed])
        train, test = X.subset(range(1000)), X.subset(range(1000, 1500))
        for j, k in enumerate(ks):
            m = krr_fit(train, y[:1000], KernelSpec("gaussian", 1.0), k, 1e-8,
                        seed=trial_rng(seed, k))
            curve[j] += smape(y[1000:], krr_predict(m, test)) / 20
    mono = bool(np.all(np.diff(curve) < 0))
    report(9, "full-pivot KRR = dense solve; SMAPE falls with k", worst <= 1e-8 and mono,
           f"max rel coef error={worst:.2e}, mean SMAPE "
           + " > ".join(f"{v:.2e}" for v in curve))


def test_10_clustering():
    centers = [[0, 0], [10, 0], [0, 10], [10, 10]]
    good, monotone = 0, True
    for t in range(100):
        rng = trial_rng(10, t)
        X, labels = gen.gen_blobs(2000, centers, 1.0, rng)
        model = spectral_cluster(X, KernelSpec("gaussian", 2.0), 30, 4, 4, seed=rng)
        good += clustering_error(model.labels, labels, 4) <= 0.005
        h = model.objective_history
        monotone &= all(b <= a * (1 + 1e-12) for a, b in zip(h, h[1:]))
    report(10, "blobs clustered within 0.5% in >= 95/100 trials", good >= 95 and monotone,
           f"{good}/100 within 0.5%, k-means objective monotone={monotone}")


def test_11_reproducibility(tmp_path):
    from rpcholesky.bench.cli import main

    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "experiment: repro\n"
        "source: {kind: smile, n: 400}\n"
        "strategies: [rpcholesky, blocked, uniform, greedy, diagonal, rls]\n"
        "ranks: [5, 10, 20]\n"
        "trials: 4\n"
    )
    paths = [tmp_path / f"{name}.csv" for name in ("a", "b", "par")]
    main(["compare", "--config", str(cfg), "--seed", "11", "--output", str(paths[0])])
    main(["compare", "--config", str(cfg), "--seed", "11", "--output", str(paths[1])])
    main(["compare", "--config", str(cfg), "--seed", "11", "--output", str(paths[2]),
          "--workers", "2"])
    a, b, par = (p.read_bytes() for p in paths)
    rows = a.decode().strip().splitlines()
    ok = a == b and sorted(rows) == sorted(par.decode().strip().splitlines()) \
        and len(rows) == 1 + 4 * 6 * 3
    report(11, "compare is byte-reproducible, serial = parallel", ok,
           f"{len(rows) - 1} rows, repeat identical={a == b}, parallel identical={a == par}")
