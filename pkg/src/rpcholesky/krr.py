"""Kernel ridge regression restricted to a set of Nystrom pivots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import EPS, IndefiniteMatrixError, solve_spd
from .oracle import Dataset, EntryOracle, KernelSpec
from .strategies import select_pivots

__all__ = ["KrrModel", "krr_fit", "krr_predict", "restricted_system", "smape"]


@dataclass
class KrrModel:
    pivots: np.ndarray
    coef: np.ndarray
    kernel: KernelSpec
    points: np.ndarray  # training points at the pivots, one per row
    lam: float
    n_train: int = 0
    entry_evals: int = 0

    def predict(self, queries):
        return krr_predict(self, queries)


def restricted_system(A_cols, S, y, lam):
    """Matrix and right-hand side of the k x k coefficient system

    (A(S,:) A(:,S) + lam N A(S,S)) beta = A(S,:) y

    given ``A_cols = A(:, S)``.
    """
    n = A_cols.shape[0]
    A_SS = A_cols[S, :]
    M = A_cols.T @ A_cols + lam * n * A_SS
    M = 0.5 * (M + M.T)
    return M, A_cols.T @ y


def _solve_restricted(M, rhs, A_SS):
    try:
        return solve_spd(M, rhs)
    except IndefiniteMatrixError:
        pass
    shift = 10 * EPS * max(float(np.trace(A_SS)), 1.0)
    for _ in range(8):
        try:
            return solve_spd(M + shift * np.eye(len(M)), rhs)
        except IndefiniteMatrixError:
            shift *= 100
    raise IndefiniteMatrixError("restricted KRR system could not be regularized")


def krr_fit(train, y, kernel, k, lam, strategy="rpcholesky", seed=None, **strategy_opts):
    """Select ``k`` pivots with ``strategy`` and fit the restricted KRR model.

    The pivot search costs whatever the strategy costs; forming ``A(:,S)``
    adds ``k N`` entry evaluations.
    """
    if not lam > 0:
        raise ValueError("ridge parameter must be positive")
    if not isinstance(train, Dataset):
        train = Dataset(train)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != train.n:
        raise ValueError("need one target per training point")
    if not 1 <= k <= train.n:
        raise ValueError("rank must lie in [1, N]")
    oracle = EntryOracle.from_kernel(kernel, train)
    factor, _ = select_pivots(oracle, strategy, k, seed, **strategy_opts)
    S = np.asarray(factor.pivots, dtype=np.intp)
    A_cols = oracle.columns(S)
    M, rhs = restricted_system(A_cols, S, y, lam)
    coef = _solve_restricted(M, rhs, A_cols[S, :])
    return KrrModel(
        pivots=S,
        coef=coef,
        kernel=kernel,
        points=train.points[S].copy(),
        lam=float(lam),
        n_train=train.n,
        entry_evals=oracle.eval_counter,
    )


def krr_predict(model, queries):
    Q = queries.points if isinstance(queries, Dataset) else np.atleast_2d(np.asarray(queries, float))
    if Q.shape[1] != model.points.shape[1]:
        raise ValueError(
            f"query dimension {Q.shape[1]} does not match training dimension "
            f"{model.points.shape[1]}"
        )
    if len(model.coef) == 0:
        return np.zeros(Q.shape[0])
    return model.kernel(Q, model.points) @ model.coef


def smape(y_true, y_pred):
    """Symmetric mean absolute percentage error; a 0/0 term counts as 0."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch")
    if y_true.size == 0:
        raise ValueError("empty input")
    denom = (np.abs(y_true) + np.abs(y_pred)) / 2
    both_zero = (np.abs(y_true) < 1e-300) & (np.abs(y_pred) < 1e-300)
    terms = np.where(both_zero, 0.0, np.abs(y_true - y_pred) / np.where(both_zero, 1.0, denom))
    return float(np.mean(terms))
