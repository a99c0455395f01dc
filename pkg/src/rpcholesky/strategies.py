"""Name -> pivot strategy lookup used by the applications and the bench CLI."""

from __future__ import annotations

from .baselines import (
    diagonal_pivots,
    greedy_pivots,
    rls_lambda_for_size,
    rls_pivots,
    rls_scores_from_eig,
    uniform_pivots,
)
from .core import StopRule, as_oracle, rpcholesky, rpcholesky_blocked
from .linalg import sym_eig

STRATEGIES = (
    "rpcholesky",
    "blocked",
    "greedy",
    "uniform",
    "uniform_noreplace",
    "diagonal",
    "rls",
)

# strategies that need the explicit matrix (N^2 entries)
DENSE_ONLY = frozenset({"rls"})
RLS_MAX_DIM = 5000

# one eigendecomposition per oracle is reused across ranks and trials;
# every rls run is still charged the N^2 entries it reads in rls_pivots
_EIG_CACHE = {}


def _calibrated_rls(oracle, k, delta):
    hit = _EIG_CACHE.get(id(oracle))
    if hit is None or hit[0] is not oracle:
        _EIG_CACHE.clear()
        hit = _EIG_CACHE[id(oracle)] = (oracle, sym_eig(oracle.to_dense(count=False)), {})
    _, dec, by_size = hit
    if (k, delta) not in by_size:
        lam = rls_lambda_for_size(dec, k, delta)
        by_size[k, delta] = (lam, rls_scores_from_eig(dec, lam, delta))
    return by_size[k, delta]


def select_pivots(oracle, strategy, k, seed=None, *, block_size=10, rls_lambda=None,
                  rls_delta=0.05):
    """Run ``strategy`` for rank ``k`` on ``oracle``.

    ``strategy`` is one of :data:`STRATEGIES` or a callable
    ``f(oracle, k, seed) -> (NystromFactor, PivotTrace)``.
    """
    oracle = as_oracle(oracle)
    if callable(strategy):
        return strategy(oracle, k, seed)
    if strategy == "rpcholesky":
        return rpcholesky(oracle, StopRule.fixed_rank(k), seed)
    if strategy == "blocked":
        return rpcholesky_blocked(oracle, k, block_size, seed)
    if strategy == "greedy":
        return greedy_pivots(oracle, StopRule.fixed_rank(k))
    if strategy == "uniform":
        return uniform_pivots(oracle, k, replace=True, seed=seed)
    if strategy == "uniform_noreplace":
        return uniform_pivots(oracle, min(k, oracle.dim), replace=False, seed=seed)
    if strategy == "diagonal":
        return diagonal_pivots(oracle, k, seed)
    if strategy == "rls":
        if oracle.dim > RLS_MAX_DIM:
            raise ValueError("exact RLS sampling is limited to desk-scale matrices")
        if rls_lambda is not None:
            return rls_pivots(oracle, rls_lambda, rls_delta, seed)
        # pick lam so that the expected sample size sum(p) is k
        lam, scores = _calibrated_rls(oracle, k, rls_delta)
        return rls_pivots(oracle, lam, rls_delta, seed, scores)
    raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
