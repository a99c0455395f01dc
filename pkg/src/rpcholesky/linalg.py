"""Dense symmetric linear algebra shared by the factorizations and apps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "SpectralDecomposition",
    "IndefiniteMatrixError",
    "sym_eig",
    "best_rank_r_error",
    "relative_trace_error",
    "expected_residual_map",
    "solve_spd",
    "pinv_psd",
    "min_eig",
]

EPS = np.finfo(float).eps


class IndefiniteMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix expected to be positive definite is not."""


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns

    def truncate(self, r):
        """Best rank-r approximation from the leading eigenpairs."""
        V = self.eigenvectors[:, :r]
        return (V * self.eigenvalues[:r]) @ V.T


def _check_symmetric(A, rtol=1e-12):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(np.abs(A).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(A - A.T).max(initial=0.0) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return A


def sym_eig(A):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending."""
    A = _check_symmetric(A)
    w, V = np.linalg.eigh(A)
    return SpectralDecomposition(w[::-1].copy(), V[:, ::-1].copy())


def min_eig(A):
    A = np.asarray(A, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


def best_rank_r_error(A, r):
    """tr(A - [[A]]_r): sum of all but the ``r`` largest eigenvalues."""
    A = np.asarray(A, dtype=float)
    if not 0 <= r <= A.shape[0]:
        raise ValueError("rank out of range")
    if r == 0:
        return float(np.trace(A))
    w = sym_eig(A).eigenvalues
    return float(np.sum(w[r:]))


def relative_trace_error(A, factor):
    """tr(A - F F^*) / tr(A), computed as (tr A - ||F||_F^2) / tr A.

    ``A`` may be a dense matrix or just its trace; ``factor`` may be a
    :class:`~rpcholesky.core.NystromFactor` or a bare ``F`` array.
    """
    trA = float(A) if np.ndim(A) == 0 else float(np.trace(A))
    F = getattr(factor, "F", factor)
    err = (trA - float(np.sum(np.square(F)))) / trA
    return max(err, 0.0)


def expected_residual_map(A):
    """A - A^2 / tr(A), the mean residual after one RPCholesky step."""
    A = np.asarray(A, dtype=float)
    tr = np.trace(A)
    if tr <= 0:
        raise ValueError("expected residual map needs positive trace")
    return A - (A @ A) / tr


def solve_spd(M, b):
    """Solve ``M x = b`` for symmetric positive definite ``M`` via Cholesky."""
    M = np.asarray(M, dtype=float)
    try:
        c = sla.cho_factor(M, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteMatrixError(f"matrix is not positive definite: {exc}") from None
    return sla.cho_solve(c, b)


def pinv_psd(A, size=None):
    """Pseudoinverse of a small psd matrix in factored form.

    Returns ``W`` with ``A^+ = W W^*``.  Eigenvalues below
    ``size * eps * lambda_max`` are discarded (``size`` defaults to the
    order of ``A``).
    """
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    if w.size == 0:
        return np.zeros((0, 0))
    size = max(A.shape) if size is None else size
    cutoff = size * EPS * max(w[-1], 0.0)
    keep = w > cutoff
    return V[:, keep] / np.sqrt(w[keep])
