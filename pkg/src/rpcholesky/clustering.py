"""Spectral clustering on a Nystrom approximation of the kernel matrix."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import as_generator
from .oracle import Dataset, EntryOracle
from .strategies import select_pivots

__all__ = [
    "ClusterModel",
    "spectral_embedding",
    "spectral_cluster",
    "kmeans",
    "clustering_error",
]

KMEANS_MAX_ITER = 300


@dataclass
class ClusterModel:
    m: int
    embedding: np.ndarray
    labels: np.ndarray
    centroids: np.ndarray
    pivots: np.ndarray
    objective_history: list = field(default_factory=list)


def spectral_embedding(F, m):
    """Leading ``m`` columns of V = D^{-1/2} U, where U holds the left
    singular vectors of D^{-1/2} F and D = diag(F F^* 1).

    Returns ``(V[:, :m], U)``.
    """
    F = np.asarray(F, dtype=float)
    rowsums = F @ (F.T @ np.ones(F.shape[0]))
    top = rowsums.max(initial=0.0)
    floor = 1e-12 * top if top > 0 else 1e-300
    rowsums = np.maximum(rowsums, floor)
    scale = 1.0 / np.sqrt(rowsums)
    G = F * scale[:, None]
    U, _, _ = np.linalg.svd(G, full_matrices=False)
    V = U * scale[:, None]
    return V[:, :m], U


def _sqdist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(X, c, rng):
    n = X.shape[0]
    centers = [X[int(rng.integers(n))]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, c):
        total = closest.sum()
        if total > 0:
            cdf = np.cumsum(closest)
            j = int(np.searchsorted(cdf, rng.random() * total, side="right"))
            j = min(j, n - 1)
        else:
            j = int(rng.integers(n))
        centers.append(X[j])
        closest = np.minimum(closest, ((X - X[j]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, C, max_iter):
    history = []
    labels = None
    for _ in range(max_iter):
        dist = _sqdist(X, C)
        new_labels = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(C.shape[0]):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
        history.append(float(((X - C[labels]) ** 2).sum()))
    return labels, C, history


def kmeans(points, c, seed=None, restarts=1, max_iter=KMEANS_MAX_ITER, return_history=False):
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` runs.

    With ``return_history`` the objective after every assignment and every
    centroid update is returned as a third value.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= c <= n:
        raise ValueError("cluster count must lie in [1, N]")
    rng = as_generator(seed)
    best = None
    for _ in range(max(restarts, 1)):
        C = _kmeans_pp(X, c, rng)
        labels, C, history = _lloyd(X, C.copy(), max_iter)
        if best is None or history[-1] < best[2][-1]:
            best = (labels, C, history)
    labels, C, history = best
    if return_history:
        return labels, C, history
    return labels, C


def spectral_cluster(data, kernel, k, m, c, strategy="rpcholesky", seed=None, restarts=1,
                     **strategy_opts):
    if not isinstance(data, Dataset):
        data = Dataset(data)
    if m > k:
        raise ValueError("eigenvector count m must not exceed the rank k")
    if c < 1:
        raise ValueError("need at least one cluster")
    rng = as_generator(seed)
    oracle = EntryOracle.from_kernel(kernel, data)
    factor, _ = select_pivots(oracle, strategy, k, rng, **strategy_opts)
    emb, _ = spectral_embedding(factor.F, m)
    labels, centroids, history = kmeans(emb, c, rng, restarts=restarts, return_history=True)
    return ClusterModel(m, emb, labels, centroids, np.asarray(factor.pivots), history)


def clustering_error(labels, reference, c=None):
    """Fraction of points misassigned under the best matching of label ids."""
    labels = np.asarray(labels, dtype=int).ravel()
    reference = np.asarray(reference, dtype=int).ravel()
    if labels.shape != reference.shape:
        raise ValueError("length mismatch")
    if labels.size == 0:
        return 0.0
    if c is None:
        c = int(max(labels.max(), reference.max())) + 1
    confusion = np.zeros((c, c), dtype=int)
    np.add.at(confusion, (labels, reference), 1)
    if c <= 8:
        best = max(
            sum(confusion[i, p[i]] for i in range(c))
            for p in itertools.permutations(range(c))
        )
    else:
        rows, cols = linear_sum_assignment(-confusion)
        best = int(confusion[rows, cols].sum())
    return 1.0 - best / labels.size
