import numpy as np
import pytest


def random_psd(n, rank=None, seed=0, decay=None):
    """Random psd matrix G G^T (optionally low rank or with decaying columns)."""
    rng = np.random.default_rng(seed)
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank))
    if decay is not None:
        G = G * np.arange(1, rank + 1) ** (-decay)
    A = G @ G.T
    return 0.5 * (A + A.T)


def rel_fro(X, Y):
    return np.linalg.norm(X - Y) / max(np.linalg.norm(Y), 1e-300)


@pytest.fixture
def psd5():
    return random_psd(5, seed=123)


@pytest.fixture
def psd50():
    return random_psd(50, seed=7, decay=1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
