import numpy as np
import pytest
from scipy import sparse

from manifold_spectra.geometry import PointCloud, sample, uniform_density
from manifold_spectra.graph import (
    WeightedGraph,
    build_graph,
    build_graph_bruteforce,
    degrees,
    dirichlet_b,
)
from manifold_spectra.kernels import make_kernel
from manifold_spectra.laplacian import assemble


def test_two_point_weight(two_point_cloud, indicator):
    cloud, chord = two_point_cloud
    h = 2 * chord
    graph = build_graph(cloud, h, indicator)
    w = graph.weights.toarray()
    assert w[0, 1] == pytest.approx(1 / (2 * np.pi * h**2))
    assert w[0, 1] == w[1, 0]
    assert w[0, 0] == pytest.approx(indicator.eta0 / (2 * h**2))
    # eta(0) + eta(1/2) over n h^m
    np.testing.assert_allclose(
        degrees(graph), (indicator.eta0 + indicator.eta_half) / (2 * h**2)
    )


def test_two_point_out_of_range(two_point_cloud, indicator):
    cloud, chord = two_point_cloud
    graph = build_graph(cloud, chord / 2, indicator)
    assert graph.weights.toarray()[0, 1] == 0
    assert graph.nnz == 2
    assert not graph.metadata["empty"]


def test_single_vertex_degree(T2, indicator):
    cloud = sample(T2, uniform_density(T2), 1, seed=0)
    h = 0.1
    graph = build_graph(cloud, h, indicator)
    np.testing.assert_allclose(degrees(graph), [indicator.eta0 / h**2])


def test_self_loops_off(torus_cloud, indicator):
    with_loops = build_graph(torus_cloud, 0.15, indicator)
    without = build_graph(torus_cloud, 0.15, indicator, self_loops=False)
    assert not without.weights.diagonal().any()
    assert with_loops.nnz - without.nnz == torus_cloud.n
    np.testing.assert_allclose(
        degrees(with_loops) - degrees(without),
        indicator.eta0 / (torus_cloud.n * 0.15**2),
    )


@pytest.mark.parametrize("profile", ["indicator", "bump", "expbump"])
def test_matches_bruteforce(torus_cloud, profile):
    kernel = make_kernel(profile, 2)
    fast = build_graph(torus_cloud, 0.2, kernel)
    slow = build_graph_bruteforce(torus_cloud, 0.2, kernel)
    np.testing.assert_array_equal(fast.weights.indptr, slow.weights.indptr)
    np.testing.assert_array_equal(fast.weights.indices, slow.weights.indices)
    np.testing.assert_allclose(fast.weights.data, slow.weights.data, rtol=1e-14)


def test_exact_symmetry(sphere_cloud):
    graph = build_graph(sphere_cloud, 0.3, make_kernel("gauss", 2))
    w = graph.weights
    assert (w != w.T).nnz == 0
    assert w.has_sorted_indices


def test_empty_graph(S2, indicator):
    points = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    cloud = PointCloud(points, S2, uniform_density(S2))
    with pytest.warns(RuntimeWarning, match="has no edges"):
        graph = build_graph(cloud, 0.01, indicator, self_loops=False)
    assert graph.metadata["empty"]
    assert graph.nnz == 0

    quiet = build_graph(cloud, 0.01, indicator, self_loops=False, warn=False)
    assert quiet.metadata["empty"]


def test_bad_arguments(torus_cloud, indicator):
    with pytest.raises(ValueError, match="must be positive"):
        build_graph(torus_cloud, 0.0, indicator)
    with pytest.raises(ValueError, match="normalized in dimension 3"):
        build_graph(torus_cloud, 0.1, make_kernel("indicator", 3))


def test_from_weights(indicator):
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    graph = WeightedGraph.from_weights(path, indicator)
    assert graph.n == 3
    assert graph.cloud is None
    assert not graph.self_loops

    with pytest.raises(ValueError, match="symmetric"):
        WeightedGraph.from_weights(np.triu(path), indicator)
    with pytest.raises(ValueError, match="nonnegative"):
        WeightedGraph.from_weights(-path, indicator)
    with pytest.raises(ValueError, match="square"):
        WeightedGraph.from_weights(np.ones((2, 3)), indicator)


def test_dirichlet_constant(torus_graph):
    assert dirichlet_b(torus_graph, np.full(torus_graph.n, 3.0)) == 0


def test_dirichlet_two_points(two_point_cloud, indicator):
    cloud, chord = two_point_cloud
    h = 2 * chord
    graph = build_graph(cloud, h, indicator)
    w12 = graph.weights.toarray()[0, 1]
    u = np.array([1.0, -0.5])
    expected = (1 / (2 * indicator.sigma)) * 2 * w12 * (u[1] - u[0]) ** 2 / h**2
    assert dirichlet_b(graph, u) == pytest.approx(expected)


def test_dirichlet_is_quadratic_form(torus_graph):
    u = np.random.default_rng(0).standard_normal(torus_graph.n)
    op = assemble(torus_graph, "unnormalized")
    assert dirichlet_b(torus_graph, u) == pytest.approx(
        op.quadratic_form(u), rel=1e-10
    )


def test_dirichlet_size_mismatch(torus_graph):
    with pytest.raises(ValueError, match="u must have 400 entries"):
        dirichlet_b(torus_graph, np.zeros(3))


def test_sparse_input(indicator):
    w = sparse.coo_array(([2.0, 2.0], ([0, 1], [1, 0])), shape=(2, 2))
    graph = WeightedGraph.from_weights(w, indicator, h=0.5)
    assert graph.h == 0.5
    np.testing.assert_array_equal(degrees(graph), [2.0, 2.0])
