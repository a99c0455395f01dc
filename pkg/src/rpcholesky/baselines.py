"""Competing ways of choosing Nystrom pivots.

All strategies return ``(NystromFactor, PivotTrace)`` so they can be swapped
for :func:`rpcholesky.core.rpcholesky` in experiments and applications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    PivotTrace,
    _acceptance_floor,
    _as_stop,
    _FactorBuffer,
    _initial_capacity,
    _residual_columns,
    _sample,
    NystromFactor,
    as_generator,
    as_oracle,
    nystrom_from_pivots,
    pivoted_cholesky,
)
from .linalg import solve_spd

__all__ = [
    "RlsScores",
    "greedy_pivots",
    "uniform_pivots",
    "diagonal_pivots",
    "rls_scores_exact",
    "rls_scores_from_eig",
    "rls_lambda_for_size",
    "rls_pivots",
]


def greedy_pivots(oracle, stop):
    """Complete (diagonal) pivoting: always eliminate the largest residual
    diagonal entry, lowest index on ties.  Deterministic."""
    oracle = as_oracle(oracle)
    stop = _as_stop(stop)
    n = oracle.dim
    start = oracle.eval_counter

    d = np.array(oracle.diagonal(), dtype=float)
    tr0 = float(d.sum())
    floor = _acceptance_floor(tr0, n)
    kmax = stop.max_rank(n)
    buf = _FactorBuffer(n, _initial_capacity(stop, n))
    pivots = []
    trace = PivotTrace(residual_trace_history=[tr0])

    while len(pivots) < kmax:
        total = float(d.sum())
        if total <= floor or stop.satisfied(total, tr0):
            break
        s = int(np.argmax(d))
        if d[s] <= floor:
            break
        i = len(pivots)
        F = buf.ensure(i + 1)
        g = _residual_columns(oracle, F, i, [s])[:, 0]
        if g[s] <= floor:
            trace.rejected_pivots += 1
            d[s] = 0.0
            continue
        F[:, i] = g / np.sqrt(g[s])
        d -= F[:, i] ** 2
        np.maximum(d, 0.0, out=d)
        pivots.append(s)
        trace.residual_trace_history.append(float(d.sum()))

    k = len(pivots)
    trace.accepted = trace.requested = k
    trace.pivots = tuple(pivots)
    trace.entry_evals = oracle.eval_counter - start
    return NystromFactor(buf.F[:, :k].copy(), pivots, n), trace


def uniform_pivots(oracle, k, replace=True, seed=None):
    oracle = as_oracle(oracle)
    rng = as_generator(seed)
    n = oracle.dim
    if not replace and k > n:
        raise ValueError("cannot draw more than N pivots without replacement")
    if replace:
        # one double per draw, same stream discipline as rpcholesky
        S = np.minimum((rng.random(k) * n).astype(np.intp), n - 1)
    else:
        S = rng.permutation(n)[:k]
    return pivoted_cholesky(oracle, S)


def diagonal_pivots(oracle, k, seed=None):
    """``k`` iid draws from diag(A) / tr(A), fixed up front."""
    oracle = as_oracle(oracle)
    rng = as_generator(seed)
    start = oracle.eval_counter
    d = np.array(oracle.diagonal(), dtype=float)
    if not d.sum() > 0:
        raise ValueError("diagonal sampling needs a positive trace")
    S = _sample(d, rng.random(k))
    factor, trace = pivoted_cholesky(oracle, S, diagonal=d)
    trace.entry_evals = oracle.eval_counter - start
    return factor, trace


@dataclass(frozen=True)
class RlsScores:
    lam: float
    scores: np.ndarray
    probabilities: np.ndarray
    delta: float


def _rls_probabilities(scores, delta):
    total = scores.sum()
    if not total > 0:
        return np.zeros_like(scores)
    # log(total / delta) < 0 once total < delta; clip keeps p in [0, 1]
    return np.clip(16.0 * scores * np.log(total / delta), 0.0, 1.0)


def _check_rls_args(lam, delta):
    if not lam > 0:
        raise ValueError("ridge parameter must be positive")
    if not 0 < delta < 1 / 8:
        raise ValueError("delta must lie in (0, 1/8)")


def rls_scores_exact(A, lam, delta=0.05):
    """Ridge leverage scores diag(A (A + lam I)^{-1}) by a dense solve, and
    inclusion probabilities min(1, 16 l log(sum(l) / delta))."""
    _check_rls_args(lam, delta)
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    # A (A + lam I)^{-1} = I - lam (A + lam I)^{-1}
    inv = solve_spd(A + lam * np.eye(n), np.eye(n))
    scores = np.clip(1.0 - lam * np.diag(inv), 0.0, 1.0)
    return RlsScores(float(lam), scores, _rls_probabilities(scores, delta), float(delta))


def _eig_scores(V2, w, lam):
    return np.clip(V2 @ (w / (w + lam)), 0.0, 1.0)


def rls_scores_from_eig(dec, lam, delta=0.05):
    """Same scores from an eigendecomposition, for sweeping ``lam`` cheaply."""
    _check_rls_args(lam, delta)
    w = np.maximum(dec.eigenvalues, 0.0)
    scores = _eig_scores(np.square(dec.eigenvectors), w, lam)
    return RlsScores(float(lam), scores, _rls_probabilities(scores, delta), float(delta))


def rls_lambda_for_size(dec, size, delta=0.05, iters=100):
    """Ridge parameter whose expected sample size sum(p) is ``size``.

    sum(p) decreases in lam, so bisect on log(lam).
    """
    _check_rls_args(1.0, delta)
    w = np.maximum(dec.eigenvalues, 0.0)
    V2 = np.square(dec.eigenvectors)
    top = max(float(w[0]), 1e-300)
    lo, hi = math.log(top * 1e-16), math.log(top * 1e8)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _rls_probabilities(_eig_scores(V2, w, math.exp(mid)), delta).sum() > size:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    return math.exp(hi)


def rls_pivots(A, lam, delta=0.05, seed=None, scores=None):
    """Include each index independently with its RLS probability, then form
    the column Nystrom approximation on the included set.

    ``entry_evals`` counts the N^2 entries needed to form the scores plus
    the columns read for the approximation.  Precomputed ``scores`` (an
    :class:`RlsScores` for the same ``lam`` and ``delta``) skip the solve.
    """
    oracle = as_oracle(A)
    rng = as_generator(seed)
    n = oracle.dim
    start = oracle.eval_counter
    dense = oracle.to_dense()
    rls = scores if scores is not None else rls_scores_exact(dense, lam, delta)
    S = np.flatnonzero(rng.random(n) < rls.probabilities)
    factor = nystrom_from_pivots(oracle, S)
    tr0 = float(np.trace(dense))
    trace = PivotTrace(
        residual_trace_history=[tr0, tr0 - factor.trace()],
        entry_evals=oracle.eval_counter - start,
        accepted=len(S),
        requested=len(S),
        pivots=tuple(int(s) for s in S),
    )
    return factor, trace
