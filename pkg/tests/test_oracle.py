import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpcholesky.linalg import min_eig
from rpcholesky.oracle import (
    Dataset,
    EntryOracle,
    KernelSpec,
    load_dataset_csv,
    save_dataset_csv,
)


def test_entry_explicit():
    o = EntryOracle.from_matrix([[2, 1], [1, 1]])
    assert o.entry(0, 1) == 1.0
    assert o.eval_counter == 1


def test_entry_gaussian_self():
    o = EntryOracle.from_kernel(KernelSpec("gaussian", 1.0), [[0.3, -2.0], [1.0, 1.0]])
    assert o.entry(1, 1) == 1.0


def test_entry_laplace_by_hand():
    o = EntryOracle.from_kernel(KernelSpec("laplace_l1", 1.0), [[0.0], [1.0]])
    assert o.entry(0, 1) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert o.entry(0, 1) == pytest.approx(0.36787944117144233)


def test_column():
    o = EntryOracle.from_matrix(np.eye(3))
    np.testing.assert_array_equal(o.column(1), [0, 1, 0])
    g = EntryOracle.from_kernel(KernelSpec("gaussian", 1.0), [[0.0], [1.0]])
    np.testing.assert_allclose(g.column(0), [1.0, math.exp(-0.5)], rtol=1e-15)


def test_column_counter():
    o = EntryOracle.from_kernel(KernelSpec("gaussian", 1.0), np.arange(5.0))
    assert o.eval_counter == 0
    o.column(3)
    assert o.eval_counter == 5


def test_diagonal():
    np.testing.assert_array_equal(EntryOracle.from_matrix(np.diag([3.0, 2, 1])).diagonal(), [3, 2, 1])
    g = EntryOracle.from_kernel(KernelSpec("gaussian", 0.7), np.random.default_rng(0).normal(size=(4, 3)))
    np.testing.assert_array_equal(g.diagonal(), np.ones(4))
    assert g.eval_counter == 4
    np.testing.assert_array_equal(EntryOracle.from_matrix([[2, 1], [1, 1]]).diagonal(), [2, 1])


def test_submatrix():
    o = EntryOracle.from_matrix(np.eye(3))
    np.testing.assert_array_equal(o.submatrix([0, 2], [0, 2]), np.eye(2))
    o2 = EntryOracle.from_matrix([[2, 1], [1, 1]])
    np.testing.assert_array_equal(o2.submatrix([0, 1], [1]), [[1], [1]])
    o3 = EntryOracle.from_matrix(np.eye(4))
    o3.submatrix([0, 1], [1, 2, 3])
    assert o3.eval_counter == 6


@pytest.mark.parametrize("call", [
    lambda o: o.entry(0, 3),
    lambda o: o.entry(-1, 0),
    lambda o: o.column(5),
    lambda o: o.submatrix([0, 3], [0]),
])
def test_index_errors(call):
    with pytest.raises(IndexError):
        call(EntryOracle.from_matrix(np.eye(3)))


def test_duplicates_rejected():
    with pytest.raises(ValueError):
        EntryOracle.from_matrix(np.eye(3)).submatrix([0, 0], [1])


def test_explicit_must_be_symmetric():
    with pytest.raises(ValueError):
        EntryOracle.from_matrix([[1.0, 2.0], [0.0, 1.0]])


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("polynomial", 1.0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", 0.0)


def test_dataset_is_not_copied_or_mutable():
    ds = Dataset(np.zeros((3, 2)))
    o = EntryOracle.from_kernel(KernelSpec(), ds)
    assert o.data is ds
    with pytest.raises(ValueError):
        ds.points[0, 0] = 1.0


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    family=st.sampled_from(["gaussian", "laplace_l1"]),
    bw=st.floats(0.1, 10.0),
)
def test_kernel_symmetry_and_range(seed, family, bw):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3))
    o = EntryOracle.from_kernel(KernelSpec(family, bw), X)
    for _ in range(10):
        i, j = rng.integers(12, size=2)
        a, b = o.entry(i, j), o.entry(j, i)
        assert abs(a - b) <= 1e-15
        assert 0 <= a <= 1
    assert o.eval_counter == 20


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), family=st.sampled_from(["gaussian", "laplace_l1"]))
def test_kernel_gram_is_psd(seed, family):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    X = rng.normal(size=(n, 2))
    K = EntryOracle.from_kernel(KernelSpec(family, float(rng.uniform(0.2, 3))), X).to_dense()
    assert min_eig(K) >= -1e-10 * np.trace(K)


def test_counter_is_sum_of_increments():
    o = EntryOracle.from_matrix(np.eye(6))
    o.entry(1, 2)
    o.column(0)
    o.diagonal()
    o.submatrix([1, 2], [3, 4, 5])
    o.columns([0, 5])
    assert o.eval_counter == 1 + 6 + 6 + 6 + 12


def test_counter_is_thread_safe():
    o = EntryOracle.from_kernel(KernelSpec(), np.random.default_rng(0).normal(size=(40, 2)))

    def work():
        for j in range(40):
            o.column(j)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert o.eval_counter == 8 * 40 * 40


def test_csv_roundtrip(tmp_path):
    X = np.random.default_rng(1).normal(size=(7, 3))
    save_dataset_csv(tmp_path / "x.csv", X)
    np.testing.assert_array_equal(load_dataset_csv(tmp_path / "x.csv").points, X)
