import numpy as np
import pytest
import scipy.linalg

from manifold_spectra.eigensolve import (
    dense_sym_eig,
    eigen_clusters,
    lobpcg_quiet,
    smallest_k,
)
from manifold_spectra.graph import WeightedGraph
from manifold_spectra.laplacian import assemble


def _cubic_roots(a):
    """Eigenvalues of a symmetric 3x3 matrix by the trigonometric formula."""
    q = np.trace(a) / 3
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    p2 = np.sum((np.diag(a) - q) ** 2) + 2 * p1
    p = np.sqrt(p2 / 6)
    b = (a - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(b) / 2, -1, 1)
    phi = np.arccos(r) / 3
    big = q + 2 * p * np.cos(phi)
    small = q + 2 * p * np.cos(phi + 2 * np.pi / 3)
    return np.sort([small, 3 * q - big - small, big])


def _b_gram(result):
    v = result.eigenvectors
    return v.T @ (result.mass[:, np.newaxis] * v)


def test_identity():
    result = dense_sym_eig(np.eye(5))
    np.testing.assert_allclose(result.eigenvalues, 1)
    assert result.clusters == [(0, 5)]


def test_diagonal():
    result = dense_sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(result.eigenvalues, [1, 2, 3])
    np.testing.assert_allclose(
        np.abs(result.eigenvectors), np.eye(3)[:, [1, 2, 0]]
    )


@pytest.mark.parametrize("seed", range(5))
def test_random_cubic(seed):
    g = np.random.default_rng(seed).standard_normal((3, 3))
    a = g + g.T
    result = dense_sym_eig(a)
    np.testing.assert_allclose(result.eigenvalues, _cubic_roots(a), atol=1e-10)


def test_generalized():
    result = dense_sym_eig(np.diag([2.0, 4.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(result.eigenvalues, [2, 2])
    np.testing.assert_allclose(_b_gram(result), np.eye(2), atol=1e-14)
    assert result.inner_product == "diagonal"


def test_dense_arguments():
    with pytest.raises(ValueError, match="not symmetric"):
        dense_sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="must be square"):
        dense_sym_eig(np.ones((2, 3)))
    with pytest.raises(ValueError, match="B must be positive"):
        dense_sym_eig(np.eye(2), np.array([1.0, -1.0]))
    with pytest.raises(ValueError, match="B must be diagonal"):
        dense_sym_eig(np.eye(2), np.ones((2, 2)))


def test_eigen_clusters():
    values = [0.0, 1.0, 1.0 + 1e-12, 2.0]
    assert eigen_clusters(values) == [(0, 1), (1, 3), (3, 4)]
    assert eigen_clusters([]) == []


def test_connected_k1(torus_graph):
    result = smallest_k(assemble(torus_graph, "un"), 1)
    assert result.eigenvalues.tolist() == [0.0]
    np.testing.assert_allclose(result.eigenvectors[:, 0], 1.0)
    assert result.zero_multiplicity == 1
    assert result.converged


def test_symmetric_null_vector(torus_graph):
    op = assemble(torus_graph, "sym")
    result = smallest_k(op, 1)
    v = result.eigenvectors[:, 0]
    np.testing.assert_allclose(v / v[0], np.sqrt(op.degrees / op.degrees[0]))


@pytest.mark.parametrize("kind", ["un", "rw", "sym"])
def test_matches_dense(torus_graph, kind):
    op = assemble(torus_graph, kind)
    result = smallest_k(op, 10, seed=1)
    assert result.converged
    assert result.iterations > 0
    dense = dense_sym_eig(op.stiffness, op.mass).eigenvalues[:10]
    np.testing.assert_allclose(result.eigenvalues[1:], dense[1:], rtol=1e-7)
    assert abs(dense[0]) < 1e-8 * dense[-1]
    np.testing.assert_allclose(_b_gram(result), np.eye(10), atol=1e-6)
    assert np.all(np.diff(result.eigenvalues) >= 0)


def test_rw_and_sym_vectors(torus_graph):
    rw = smallest_k(assemble(torus_graph, "rw"), 2)
    sym = smallest_k(assemble(torus_graph, "sym"), 2)
    assert rw.eigenvalues[1] == pytest.approx(sym.eigenvalues[1], rel=1e-7)
    assert rw.inner_product == "degree"
    # D^{1/2} v_rw is proportional to v_sym
    back = np.sqrt(assemble(torus_graph, "rw").degrees) * rw.eigenvectors[:, 1]
    cos = abs(back @ sym.eigenvectors[:, 1]) / (
        np.linalg.norm(back) * np.linalg.norm(sym.eigenvectors[:, 1])
    )
    assert cos == pytest.approx(1, abs=1e-6)


def test_path_graph(indicator):
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    op = assemble(WeightedGraph.from_weights(path, indicator), "un")
    result = smallest_k(op, 3)
    np.testing.assert_allclose(result.eigenvalues / op.scale, [0, 1, 3], atol=1e-12)
    assert result.iterations == 0


def test_disconnected(indicator):
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    w = scipy.linalg.block_diag(path, path)
    op = assemble(WeightedGraph.from_weights(w, indicator), "rw")
    result = smallest_k(op, 3)
    assert result.zero_multiplicity == 2
    np.testing.assert_array_equal(result.eigenvalues[:2], 0)
    assert result.eigenvalues[2] > 0
    assert result.converged


def test_k_bounds(torus_graph):
    op = assemble(torus_graph, "un")
    with pytest.raises(ValueError, match="k must be between 1 and 400"):
        smallest_k(op, 0)
    with pytest.raises(ValueError, match="k must be between 1 and 400"):
        smallest_k(op, 401)
    with pytest.raises(ValueError, match="tol must be positive"):
        smallest_k(op, 2, tol=0)


def test_not_converged(torus_graph):
    op = assemble(torus_graph, "un")
    with pytest.warns(RuntimeWarning, match="eigenpairs meet the residual"):
        result = smallest_k(op, 10, tol=1e-12, max_iter=1)
    assert not result.converged
    assert result.n_converged < 10
    assert result.eigenvalues.size == 10


def test_quiet_not_converged(torus_graph):
    op = assemble(torus_graph, "un")
    with lobpcg_quiet():
        result = smallest_k(op, 10, tol=1e-12, max_iter=1, warn=False)
    assert not result.converged
    assert result.eigenvalues.size == 10


def _max_rayleigh(op, basis):
    """Largest Rayleigh quotient over the span of ``basis`` columns."""
    a = basis.T @ (op.stiffness @ basis)
    b = basis.T @ (op.mass[:, np.newaxis] * basis)
    return scipy.linalg.eigh(a, b, eigvals_only=True)[-1]


@pytest.mark.parametrize("kind", ["un", "rw", "sym"])
def test_min_max_characterization(torus_graph, kind):
    op = assemble(torus_graph, kind)
    k = 6
    result = smallest_k(op, k, seed=2)
    lam_k = result.eigenvalues[-1]
    assert _max_rayleigh(op, result.eigenvectors) == pytest.approx(lam_k, rel=1e-7)
    rng = np.random.default_rng(5)
    for _ in range(20):
        trial = rng.standard_normal((op.n, k))
        assert _max_rayleigh(op, trial) >= lam_k - 1e-9
