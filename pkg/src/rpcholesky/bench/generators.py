"""Synthetic datasets and test matrices for the experiments."""

from __future__ import annotations

import math

import numpy as np

from ..core import as_generator
from ..oracle import Dataset

__all__ = [
    "SMILE_GEOMETRY",
    "SMILE_BANDWIDTH",
    "OUTLIERS_BANDWIDTH",
    "smile_eye_count",
    "gen_smile",
    "gen_outliers",
    "gen_blobs",
    "gen_regression",
    "gen_greedy_worstcase",
    "greedy_worstcase_block",
    "gen_uniform_worstcase",
    "uniform_worstcase_params",
    "gen_powerlaw_psd",
]

# Face outline, mouth and eyes.  Only the point counts are fixed by the
# original experiment; the shape and the bandwidths below are our choice.
SMILE_GEOMETRY = {
    "face_radius": 1.0,
    "mouth_radius": 0.55,
    "mouth_arc": (math.radians(200.0), math.radians(340.0)),
    "eye_centers": ((-0.35, 0.35), (0.35, 0.35)),
    "eye_spread": 0.02,
    "line_noise": 0.01,
}
SMILE_BANDWIDTH = 0.2
OUTLIERS_BANDWIDTH = 10.0


def smile_eye_count(n):
    """Total number of eye points: 100 at n = 10^4, never fewer than 10."""
    return max(int(round(100 * n / 10**4)), 10)


def _arc(rng, n, radius, lo, hi, noise):
    theta = rng.uniform(lo, hi, n)
    rad = radius + noise * rng.standard_normal(n)
    return np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])


def gen_smile(n=10**4, seed=None):
    """Points on a smiley face in the plane.

    The eyes are two tight clusters holding ``smile_eye_count(n)`` points
    in total; the rest is split between the face outline and the mouth in
    proportion to arc length.
    """
    if n < 200:
        raise ValueError("smile needs at least 200 points")
    rng = as_generator(seed)
    g = SMILE_GEOMETRY
    n_eyes = smile_eye_count(n)
    lo, hi = g["mouth_arc"]
    face_len = 2 * math.pi * g["face_radius"]
    mouth_len = (hi - lo) * g["mouth_radius"]
    n_lines = n - n_eyes
    n_face = int(round(n_lines * face_len / (face_len + mouth_len)))
    n_mouth = n_lines - n_face

    face = _arc(rng, n_face, g["face_radius"], 0.0, 2 * math.pi, g["line_noise"])
    mouth = _arc(rng, n_mouth, g["mouth_radius"], lo, hi, g["line_noise"])
    eyes = []
    per_eye = [n_eyes // 2, n_eyes - n_eyes // 2]
    for center, count in zip(g["eye_centers"], per_eye):
        eyes.append(np.asarray(center) + g["eye_spread"] * rng.standard_normal((count, 2)))
    return Dataset(np.vstack([face, mouth, *eyes]))


def gen_outliers(n=10**4, d=20, n_out=50, scale=100.0, seed=None):
    """Standard Gaussian cloud in R^d whose last ``n_out`` points are
    stretched by ``scale``."""
    if not 0 <= n_out <= n:
        raise ValueError("need 0 <= n_out <= n")
    rng = as_generator(seed)
    X = rng.standard_normal((n, d))
    if n_out:
        X[n - n_out :] *= scale
    return Dataset(X)


def gen_blobs(n, centers, spread=1.0, seed=None):
    """Isotropic Gaussian blobs around ``centers`` (c x d).

    Returns ``(Dataset, labels)``; blob sizes differ by at most one.
    """
    rng = as_generator(seed)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    c, d = centers.shape
    labels = np.arange(n) % c
    rng.shuffle(labels)
    X = centers[labels] + spread * rng.standard_normal((n, d))
    return Dataset(X), labels


def gen_regression(n, d=3, seed=None):
    """Noiseless smooth target on uniform points in [-1, 1]^d.

    y = 2 + sin(2 x_1) + cos(x_2) x_3 + ..., kept away from zero so that
    percentage errors are meaningful.
    """
    rng = as_generator(seed)
    X = rng.uniform(-1.0, 1.0, (n, d))
    y = 2.0 + np.sin(2.0 * X[:, 0])
    if d > 1:
        y = y + 0.5 * np.cos(X[:, 1]) * (X[:, 2] if d > 2 else 1.0)
    return Dataset(X), y


def greedy_worstcase_block(N, eta):
    """``(M, delta)`` for the greedy worst case: M is the smallest integer
    strictly above (1 - eta) N, delta balances the trace."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    M = math.floor((1 - eta) * N) + 1
    if not 0 < M < N:
        raise ValueError(f"infeasible: M = {M} for N = {N}")
    delta = (M - (1 - eta) * N) / ((1 - eta) * (N - M))
    if not delta > 0:
        raise ValueError("infeasible: delta <= 0")
    return M, delta


def gen_greedy_worstcase(N, eta, eps=None):
    """blkdiag((1 + delta) I_{N-M}, ones(M, M)).

    The all-ones block carries a (1 - eta) fraction of the trace, so eta is
    the relative rank-1 error.  ``eps`` does not enter the construction; it
    only fixes the range of ranks over which greedy pivoting is slow.
    """
    if eps is not None and not eps > 0:
        raise ValueError("eps must be positive")
    M, delta = greedy_worstcase_block(N, eta)
    A = np.zeros((N, N))
    A[: N - M, : N - M] = (1 + delta) * np.eye(N - M)
    A[N - M :, N - M :] = 1.0
    return A


def uniform_worstcase_params(M, r, eta, eps):
    """``(N, delta)`` making the uniform worst case hit relative error eta."""
    N = math.ceil((1 - math.sqrt(eps / (1 + eps))) * (r - 1) * (M - 1) / eta)
    delta = 1 - eta * N / ((r - 1) * (M - 1))
    return N, delta


def gen_uniform_worstcase(M, r, delta, N=None):
    """blkdiag(ones(N - M(r-1)), C, ..., C) with r - 1 copies of the M x M
    matrix C = (1 - delta) I + delta 11^*.  Unit diagonal throughout.

    ``N`` defaults to r M (all blocks the same size).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if r < 2:
        raise ValueError("need r >= 2")
    if N is None:
        N = r * M
    n_ones = N - M * (r - 1)
    if n_ones < 1:
        raise ValueError("N too small for r - 1 blocks of size M")
    A = np.zeros((N, N))
    A[:n_ones, :n_ones] = 1.0
    C = (1 - delta) * np.eye(M) + delta
    for b in range(r - 1):
        lo = n_ones + b * M
        A[lo : lo + M, lo : lo + M] = C
    return A


def gen_powerlaw_psd(N, exponent=2.0, seed=None):
    """Q diag(1, 2^-p, 3^-p, ...) Q^* with a Haar-random orthogonal Q."""
    if N > 2000:
        raise ValueError("powerlaw fixtures are dense; keep N <= 2000")
    rng = as_generator(seed)
    Z = rng.standard_normal((N, N))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))
    lam = np.arange(1, N + 1, dtype=float) ** (-exponent)
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)
