import numpy as np

from rpcholesky import modelio
from rpcholesky.clustering import spectral_cluster
from rpcholesky.core import rpcholesky
from rpcholesky.krr import krr_fit, krr_predict
from rpcholesky.oracle import KernelSpec
from rpcholesky.bench.generators import gen_blobs, gen_regression


def test_krr_model_roundtrip(tmp_path):
    X, y = gen_regression(300, 3, seed=0)
    model = krr_fit(X, y, KernelSpec("laplace_l1", 2.0), 20, 1e-6, seed=1)
    modelio.save_model(tmp_path / "m.json", model)
    back = modelio.load_model(tmp_path / "m.json")
    Q = np.random.default_rng(2).uniform(-1, 1, (50, 3))
    np.testing.assert_array_equal(krr_predict(back, Q), krr_predict(model, Q))
    np.testing.assert_array_equal(back.pivots, model.pivots)
    assert back.kernel == model.kernel


def test_cluster_model_roundtrip(tmp_path):
    X, _ = gen_blobs(200, [[0, 0], [9, 9]], seed=0)
    model = spectral_cluster(X, KernelSpec("gaussian", 2.0), 10, 2, 2, seed=0)
    modelio.save_model(tmp_path / "c.json", model)
    back = modelio.load_model(tmp_path / "c.json")
    np.testing.assert_array_equal(back.labels, model.labels)
    np.testing.assert_array_equal(back.embedding, model.embedding)
    np.testing.assert_array_equal(back.centroids, model.centroids)


def test_factor_roundtrip(tmp_path):
    A = np.random.default_rng(0).normal(size=(20, 20))
    f, _ = rpcholesky(A @ A.T, 5, seed=0)
    modelio.save_factor(tmp_path / "f.npz", f)
    g = modelio.load_factor(tmp_path / "f.npz")
    np.testing.assert_array_equal(g.F, f.F)
    np.testing.assert_array_equal(g.pivots, f.pivots)
    assert g.source_dim == 20
