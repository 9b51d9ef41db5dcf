import numpy as np
import pytest

import baryfactor as bf


def test_barycenter_commuting_case():
    mean, cov = bf.barycenter([0.5, 0.5], [np.zeros(2), np.array([2.0, 2.0])],
                              [np.diag([1.0, 4.0]), np.diag([9.0, 16.0])])
    np.testing.assert_allclose(mean, [1.0, 1.0])
    np.testing.assert_allclose(cov, np.diag([4.0, 9.0]), atol=1e-10)
    assert bf.isotropic_std([1.0, 3.0], [0.25, 0.75]) == pytest.approx(2.5)
    assert bf.w2_gaussian(np.zeros(1), np.eye(1), np.ones(1), 4 * np.eye(1)) == pytest.approx(2.0)


def test_simplex_projection():
    p = bf.project_simplex(np.array([0.5, 2.0, -1.0]))
    np.testing.assert_allclose(p, [0.0, 1.0, 0.0])
    rows = bf.project_rows_simplex(np.random.default_rng(0).normal(size=(5, 3)))
    np.testing.assert_allclose(rows.sum(axis=1), 1.0)
    assert (rows >= 0).all()


def test_clustering_on_expansion_data():
    x, labels = bf.gen_expansion(1.0, 3)
    assert x.shape == (600, 2)
    assert labels.dtype.kind == "i"
    cfg = bf.ClusterConfig()
    cfg.seed = 1
    cfg.restarts = 5
    hard = bf.run_hard(x, 3, bf.Mode.ISOTROPIC, cfg)
    assert hard["labels"].shape == (600,)
    assert bf.correctness_rate(labels, hard["labels"]) > 0.8
    km = bf.kmeans(x, 3, cfg)
    assert km["objective"] > 0
    fuzzy = bf.fuzzy_kmeans(x, 3, 2.0, cfg)
    np.testing.assert_allclose(fuzzy["assignment"].sum(axis=1), 1.0)
    assert 0.0 < bf.correctness_rate(labels, fuzzy["assignment"]) <= 1.0


def test_soft_clustering_and_gradients():
    x, labels = bf.gen_dilation(1.0, 2)
    cfg = bf.ClusterConfig()
    cfg.restarts = 2
    soft = bf.run_soft(x[:60], 3, bf.Mode.GENERAL, cfg)
    trace = np.array(soft["trace"])
    assert (np.diff(trace) <= 1e-12 * trace[0]).all()
    p = np.full((60, 3), 1.0 / 3.0)
    assert bf.grad_general(x[:60], p).shape == (60, 3)
    assert bf.grad_isotropic(x[:60], p).shape == (60, 3)


def test_factor_discovery_on_a_line():
    u = np.linspace(-1.0, 1.0, 60)
    x = np.column_stack([u, 0.5 * u])
    res = bf.run_afd(x, iters=2000, eval_every=500)
    assert res["trace_iters"] == [0, 500, 1000, 1500, 2000]
    assert not res["diverged"]
    z = res["zbar"]
    assert abs(np.corrcoef(z, u)[0, 1]) > 0.99
    zs, means = bf.principal_curve(x, z, res["alpha"], 20)
    assert (np.diff(zs) > 0).all()
    assert means.shape == (20, 2)
    assert bf.sigma_quadrature(x, z, res["alpha"]) == pytest.approx(res["sigma_trace"][-1])


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        bf.barycenter([1.0], [np.zeros(2)], [])
    with pytest.raises(ValueError):
        bf.run_afd(np.zeros((5, 2)), init="spiral")
    x = bf.normalize_columns(np.array([[0.0], [2.0]]))
    np.testing.assert_allclose(x.ravel(), [-1.0, 1.0])
