"""Randomly pivoted Cholesky and other column Nystrom methods."""

from .baselines import (
    RlsScores,
    diagonal_pivots,
    greedy_pivots,
    rls_pivots,
    rls_scores_exact,
    uniform_pivots,
)
from .clustering import ClusterModel, clustering_error, kmeans, spectral_cluster
from .core import (
    NystromFactor,
    PivotTrace,
    StopRule,
    nystrom_from_pivots,
    rpcholesky,
    rpcholesky_blocked,
    rpcholesky_naive,
)
from .krr import KrrModel, krr_fit, krr_predict, smape
from .linalg import (
    SpectralDecomposition,
    best_rank_r_error,
    expected_residual_map,
    relative_trace_error,
    solve_spd,
    sym_eig,
)
from .oracle import Dataset, EntryOracle, KernelSpec

__version__ = "0.1.0"
