"""Randomly pivoted partial Cholesky.

Three implementations of the same sampling rule (pivot ``j`` drawn with
probability proportional to the current residual diagonal):

* :func:`rpcholesky_naive` keeps the dense residual matrix, O(k N^2).
* :func:`rpcholesky` keeps only the factor ``F`` and the residual diagonal,
  reading one column per accepted pivot, (k + 1) N entry evaluations.
* :func:`rpcholesky_blocked` draws up to ``B`` pivots at once.

Random stream discipline: every pivot draw consumes exactly one double from
``Generator.random``; a block of ``b`` draws consumes ``b`` doubles in order.
With ``B = 1`` the blocked and unblocked routines therefore see the same
uniforms and make bitwise identical choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import EPS, pinv_psd
from .oracle import EntryOracle

__all__ = [
    "StopRule",
    "NystromFactor",
    "PivotTrace",
    "as_generator",
    "as_oracle",
    "rpcholesky_naive",
    "rpcholesky",
    "rpcholesky_blocked",
    "nystrom_from_pivots",
    "pivoted_cholesky",
]


@dataclass(frozen=True)
class StopRule:
    """Either a fixed number of pivots ``k`` or a relative trace tolerance ``tol``."""

    k: int | None = None
    tol: float | None = None

    def __post_init__(self):
        if (self.k is None) == (self.tol is None):
            raise ValueError("exactly one of k and tol must be given")
        if self.k is not None and (int(self.k) != self.k or self.k < 0):
            raise ValueError("k must be a non-negative integer")
        if self.tol is not None and not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")

    @classmethod
    def fixed_rank(cls, k):
        return cls(k=int(k))

    @classmethod
    def tolerance(cls, eta):
        return cls(tol=float(eta))

    def max_rank(self, n):
        return n if self.k is None else min(int(self.k), n)

    def satisfied(self, residual_trace, initial_trace):
        return self.tol is not None and residual_trace <= self.tol * initial_trace


def _as_stop(stop):
    if isinstance(stop, StopRule):
        return stop
    return StopRule.fixed_rank(stop)


@dataclass(frozen=True)
class NystromFactor:
    """Low-rank approximation ``F @ F.T`` built from the columns ``pivots``."""

    F: np.ndarray
    pivots: np.ndarray
    source_dim: int

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        piv = np.asarray(self.pivots, dtype=np.intp).ravel()
        if F.ndim != 2 or F.shape[0] != self.source_dim or F.shape[1] != piv.size:
            raise ValueError(f"factor of shape {F.shape} does not match {piv.size} pivots "
                             f"on dimension {self.source_dim}")
        F.setflags(write=False)
        piv.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "pivots", piv)

    @property
    def rank(self):
        return self.F.shape[1]

    def approx(self):
        return self.F @ self.F.T

    def trace(self):
        return float(np.sum(np.square(self.F)))


@dataclass
class PivotTrace:
    residual_trace_history: list = field(default_factory=list)
    entry_evals: int = 0
    accepted: int = 0
    rejected_pivots: int = 0
    requested: int = 0
    pivots: tuple = ()

    @property
    def initial_trace(self):
        return self.residual_trace_history[0] if self.residual_trace_history else 0.0

    @property
    def residual_trace(self):
        return self.residual_trace_history[-1] if self.residual_trace_history else 0.0


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_oracle(A):
    return A if isinstance(A, EntryOracle) else EntryOracle.from_matrix(A)


def _acceptance_floor(initial_trace, n):
    return EPS * initial_trace * n


def _sample(d, u):
    """Inverse-CDF draw(s) from ``d / sum(d)`` for uniform(s) ``u``."""
    cdf = np.cumsum(d)
    idx = np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right")
    return np.minimum(idx, len(d) - 1)


def _residual_columns(oracle, F, i, cols):
    """A(:, cols) - F(:, :i) F(cols, :i)^*."""
    return oracle.columns(cols) - F[:, :i] @ F[cols, :i].T


class _FactorBuffer:
    """Column-major N x k storage that grows on demand (tolerance mode)."""

    def __init__(self, n, capacity):
        self.F = np.zeros((n, max(capacity, 1)), order="F")

    def ensure(self, cols):
        if cols > self.F.shape[1]:
            new = np.zeros((self.F.shape[0], max(cols, 2 * self.F.shape[1])), order="F")
            new[:, : self.F.shape[1]] = self.F
            self.F = new
        return self.F


def _initial_capacity(stop, n):
    return stop.max_rank(n) if stop.k is not None else min(n, 64)


def rpcholesky_naive(A, stop, seed=None, pivots=None):
    """Reference RPCholesky on a dense matrix.

    Returns ``(approx, residual, trace)`` with ``approx + residual == A`` up
    to rounding.  If ``pivots`` is given, that sequence is used instead of
    random draws (for checking other implementations step by step).
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(np.abs(A).max(), 1e-300)):
        raise ValueError("matrix is not symmetric")
    stop = _as_stop(stop)
    rng = as_generator(seed)
    n = A.shape[0]
    tr0 = float(np.trace(A))
    floor = _acceptance_floor(tr0, n)
    kmax = stop.max_rank(n) if pivots is None else len(pivots)

    approx = np.zeros_like(A)
    residual = A
    trace = PivotTrace(residual_trace_history=[tr0], entry_evals=n * n)
    chosen = []
    while len(chosen) < kmax:
        d = np.maximum(np.diag(residual), 0.0)
        total = float(d.sum())
        if total <= floor or stop.satisfied(total, tr0):
            break
        if pivots is None:
            s = int(_sample(d, rng.random()))
        else:
            s = int(pivots[len(chosen)])
        if residual[s, s] <= floor:
            if pivots is not None:
                raise ValueError(f"forced pivot {s} has zero residual diagonal")
            trace.rejected_pivots += 1
            residual[s, s] = 0.0
            continue
        update = np.outer(residual[:, s], residual[s, :]) / residual[s, s]
        approx = approx + update
        residual = residual - update
        chosen.append(s)
        trace.residual_trace_history.append(float(np.trace(residual)))
    trace.accepted = trace.requested = len(chosen)
    trace.pivots = tuple(chosen)
    return approx, residual, trace


def rpcholesky(oracle, stop, seed=None):
    """RPCholesky in factored form.

    Parameters
    ----------
    oracle : EntryOracle or array
        The psd matrix.
    stop : StopRule or int
        Number of pivots, or a relative trace tolerance.
    seed : int, Generator or None

    Returns
    -------
    (NystromFactor, PivotTrace)
    """
    oracle = as_oracle(oracle)
    stop = _as_stop(stop)
    rng = as_generator(seed)
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
        s = int(_sample(d, rng.random()))
        if d[s] <= floor:
            trace.rejected_pivots += 1
            d[s] = 0.0
            continue
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


def _block_cholesky(G, U, floor):
    """Columns ``G R^{-1}`` for ``G(U, :) = R^* R``.

    Falls back to a column-pivoted elimination inside the block when the
    Cholesky factorization breaks down; pivots whose residual drops below
    ``floor`` are dropped.  Returns ``(new_columns, kept_pivots)``.
    """
    if len(U) == 1:
        gs = G[U[0], 0]
        if gs <= floor:
            return G[:, :0], []
        return G / np.sqrt(gs), list(U)
    H = G[U, :]
    H = 0.5 * (H + H.T)
    try:
        L = np.linalg.cholesky(H)
        if np.min(np.diag(L)) ** 2 > floor:
            return sla.solve_triangular(L, G.T, lower=True).T, list(U)
    except np.linalg.LinAlgError:
        pass
    W = G.copy()
    remaining = list(range(len(U)))
    cols, kept = [], []
    while remaining:
        diag = np.array([W[U[j], j] for j in remaining])
        pos = int(np.argmax(diag))
        if diag[pos] <= floor:
            break
        j = remaining.pop(pos)
        col = W[:, j] / np.sqrt(W[U[j], j])
        W -= np.outer(col, col[U])
        cols.append(col)
        kept.append(U[j])
    if not cols:
        return G[:, :0], []
    return np.column_stack(cols), kept


def rpcholesky_blocked(oracle, k, B, seed=None):
    """Blocked RPCholesky: up to ``B`` iid pivots per round, deduplicated.

    Returns ``(NystromFactor, PivotTrace)``; the residual trace history has
    one entry per round.
    """
    if B < 1 or k < 1:
        raise ValueError("block size and rank must be positive")
    oracle = as_oracle(oracle)
    rng = as_generator(seed)
    n = oracle.dim
    start = oracle.eval_counter
    k = min(int(k), n)

    d = np.array(oracle.diagonal(), dtype=float)
    tr0 = float(d.sum())
    floor = _acceptance_floor(tr0, n)
    F = np.zeros((n, k), order="F")
    pivots = []
    trace = PivotTrace(residual_trace_history=[tr0])

    i = 0
    while i < k:
        if float(d.sum()) <= floor:
            break
        draws = _sample(d, rng.random(min(B, k - i)))
        U = list(dict.fromkeys(int(s) for s in draws))
        U_ok = [s for s in U if d[s] > floor]
        for s in U:
            if d[s] <= floor:
                trace.rejected_pivots += 1
                d[s] = 0.0
        if not U_ok:
            continue
        G = _residual_columns(oracle, F, i, U_ok)
        new, kept = _block_cholesky(G, U_ok, floor)
        for s in set(U_ok) - set(kept):
            trace.rejected_pivots += 1
            d[s] = 0.0
        if not kept:
            continue
        u = len(kept)
        F[:, i : i + u] = new
        d -= np.sum(new**2, axis=1)
        np.maximum(d, 0.0, out=d)
        pivots.extend(kept)
        i += u
        trace.residual_trace_history.append(float(d.sum()))

    trace.accepted = trace.requested = i
    trace.pivots = tuple(pivots)
    trace.entry_evals = oracle.eval_counter - start
    return NystromFactor(F[:, :i].copy(), pivots, n), trace


def pivoted_cholesky(oracle, pivots, *, diagonal=True):
    """Partial Cholesky along a prescribed pivot sequence.

    Repeated indices and pivots whose residual diagonal has vanished
    contribute no column.  Used by the non-adaptive baselines.  Pass a
    precomputed residual diagonal as ``diagonal`` to avoid reading it twice.
    """
    oracle = as_oracle(oracle)
    n = oracle.dim
    start = oracle.eval_counter
    requested = [int(s) for s in pivots]
    unique = list(dict.fromkeys(requested))
    if diagonal is True:
        d = np.array(oracle.diagonal(), dtype=float)
    elif diagonal is False or diagonal is None:
        d = None
    else:
        d = np.array(diagonal, dtype=float)
    tr0 = oracle.trace() if d is None else float(d.sum())
    floor = _acceptance_floor(tr0, n)
    F = np.zeros((n, len(unique)), order="F")
    kept = []
    trace = PivotTrace(residual_trace_history=[tr0], requested=len(requested))
    for s in unique:
        i = len(kept)
        if d is not None and d[s] <= floor:
            trace.rejected_pivots += 1
            continue
        g = _residual_columns(oracle, F, i, [s])[:, 0]
        if g[s] <= floor:
            trace.rejected_pivots += 1
            continue
        F[:, i] = g / np.sqrt(g[s])
        if d is not None:
            d -= F[:, i] ** 2
            np.maximum(d, 0.0, out=d)
            trace.residual_trace_history.append(float(d.sum()))
        else:
            trace.residual_trace_history.append(tr0 - float(np.sum(F[:, : i + 1] ** 2)))
        kept.append(s)
    trace.accepted = len(kept)
    trace.pivots = tuple(kept)
    trace.entry_evals = oracle.eval_counter - start
    return NystromFactor(F[:, : len(kept)].copy(), kept, n), trace


def nystrom_from_pivots(oracle, S):
    """Column Nystrom approximation ``A(:,S) A(S,S)^+ A(S,:)`` in factored form.

    The returned factor has ``|S|`` columns; directions removed by the
    pseudoinverse threshold appear as zero columns.
    """
    oracle = as_oracle(oracle)
    n = oracle.dim
    S = [int(s) for s in S]
    if len(set(S)) != len(S):
        raise ValueError("duplicate pivots")
    if not S:
        return NystromFactor(np.zeros((n, 0)), [], n)
    C = oracle.columns(S)
    W = pinv_psd(C[S, :], size=max(len(S), n))
    F = np.zeros((n, len(S)))
    F[:, : W.shape[1]] = C @ W
    return NystromFactor(F, S, n)
