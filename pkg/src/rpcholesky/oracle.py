"""Entry-level access to psd matrices with evaluation accounting.

A matrix is either held explicitly (small dense fixtures) or defined
implicitly by a kernel function over a point set.  Every scalar entry that
gets materialized is tallied, so algorithm costs can be checked exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "KernelSpec",
    "Dataset",
    "EntryOracle",
    "load_dataset_csv",
    "save_dataset_csv",
]

KERNEL_FAMILIES = ("gaussian", "laplace_l1")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and bandwidth.

    ``gaussian``:   exp(-||x - y||_2^2 / (2 sigma^2))
    ``laplace_l1``: exp(-||x - y||_1 / sigma)
    """

    family: str = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, X, Y):
        """Kernel matrix between the rows of ``X`` and ``Y``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.family == "gaussian":
            sq = cdist(X, Y, "sqeuclidean")
            return np.exp(-sq / (2.0 * self.bandwidth**2))
        l1 = cdist(X, Y, "cityblock")
        return np.exp(-l1 / self.bandwidth)


class Dataset:
    """An immutable ``(n, d)`` array of points."""

    def __init__(self, points):
        pts = np.array(points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("dataset needs at least one point of shape (d,)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("dataset contains non-finite coordinates")
        pts.setflags(write=False)
        self.points = pts

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx):
        return Dataset(self.points[np.asarray(idx, dtype=int)])


def load_dataset_csv(path):
    """Read a headerless CSV with one point per row."""
    pts = np.loadtxt(path, delimiter=",", ndmin=2)
    return Dataset(pts)


def save_dataset_csv(path, data):
    pts = data.points if isinstance(data, Dataset) else np.asarray(data)
    np.savetxt(path, np.atleast_2d(pts), delimiter=",", fmt="%.17g")


class EntryOracle:
    """Lazily evaluated psd matrix.

    Build with :meth:`from_matrix` or :meth:`from_kernel`.  The attribute
    ``eval_counter`` counts scalar entries handed out since construction (or
    the last :meth:`reset_counter`); it is updated under a lock so several
    threads may read from one oracle.
    """

    def __init__(self, dim, *, matrix=None, kernel=None, data=None):
        self.dim = int(dim)
        self._matrix = matrix
        self.kernel = kernel
        self.data = data
        self._count = 0
        self._lock = threading.Lock()

    @classmethod
    def from_matrix(cls, A, *, check_symmetric=True):
        A = np.array(A, dtype=float, copy=True)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError("explicit source must be a non-empty square matrix")
        if check_symmetric and not np.array_equal(A, A.T):
            raise ValueError("explicit source is not symmetric")
        A.setflags(write=False)
        return cls(A.shape[0], matrix=A)

    @classmethod
    def from_kernel(cls, kernel, data):
        if not isinstance(data, Dataset):
            data = Dataset(data)
        return cls(data.n, kernel=kernel, data=data)

    @property
    def is_explicit(self):
        return self._matrix is not None

    @property
    def eval_counter(self):
        with self._lock:
            return self._count

    def reset_counter(self):
        with self._lock:
            self._count = 0

    def _tally(self, n):
        with self._lock:
            self._count += int(n)

    def _check_index(self, idx):
        idx = np.asarray(idx)
        if idx.dtype.kind not in "iu":
            raise TypeError("indices must be integers")
        if idx.size and (idx.min() < 0 or idx.max() >= self.dim):
            raise IndexError(f"index out of range for dimension {self.dim}")
        return idx.astype(np.intp)

    def _block(self, rows, cols):
        if self._matrix is not None:
            return self._matrix[np.ix_(rows, cols)].copy()
        X = self.data.points
        return self.kernel(X[rows], X[cols])

    def entry(self, i, j):
        i, j = self._check_index([i, j])
        value = float(self._block(i[None], j[None])[0, 0])
        self._tally(1)
        return value

    def column(self, j):
        (j,) = self._check_index([j])
        col = self._block(np.arange(self.dim), np.array([j]))[:, 0]
        self._tally(self.dim)
        return col

    def columns(self, cols):
        """``A(:, cols)``; same as ``submatrix(all, cols)``."""
        cols = self._check_index(np.atleast_1d(cols))
        _reject_duplicates(cols)
        out = self._block(np.arange(self.dim), cols)
        self._tally(self.dim * len(cols))
        return out

    def diagonal(self):
        if self._matrix is not None:
            diag = np.diag(self._matrix).copy()
        else:
            X = self.data.points
            # both provided kernels equal 1 at zero distance; evaluate anyway
            diag = np.array([self.kernel(x, x)[0, 0] for x in X[:1]])
            diag = np.full(self.dim, diag[0])
        self._tally(self.dim)
        return diag

    def submatrix(self, rows, cols):
        rows = self._check_index(np.atleast_1d(rows))
        cols = self._check_index(np.atleast_1d(cols))
        _reject_duplicates(rows)
        _reject_duplicates(cols)
        out = self._block(rows, cols)
        self._tally(len(rows) * len(cols))
        return out

    def to_dense(self, *, count=True):
        """Materialize all N^2 entries.

        ``count=False`` is for caches whose cost is charged elsewhere, so
        that reported counts do not depend on cache state.
        """
        idx = np.arange(self.dim)
        out = self._block(idx, idx)
        if count:
            self._tally(self.dim * self.dim)
        return out

    def trace(self):
        """Trace without touching the counter (bookkeeping only)."""
        if self._matrix is not None:
            return float(np.trace(self._matrix))
        return float(self.dim)


def _reject_duplicates(idx):
    if len(np.unique(idx)) != len(idx):
        raise ValueError("duplicate indices")
