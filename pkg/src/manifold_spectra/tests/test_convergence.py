"""
End-to-end convergence checks. These take minutes; run them with
``pytest --run-slow``.
"""

import numpy as np
import pytest

from manifold_spectra.continuum import (
    ContinuumField,
    align_eigenspace,
    discretize_P,
    extend_Pstar,
    interpolate_I,
    kde_report,
    smooth_Lambda,
    voronoi_extend,
)
from manifold_spectra.eigensolve import smallest_k
from manifold_spectra.geometry import (
    analytic_spectrum,
    cosine_torus_density,
    quadrature_cloud,
    sample,
    sphere,
    torus,
    uniform_density,
)
from manifold_spectra.graph import build_graph, dirichlet_b
from manifold_spectra.kernels import make_kernel
from manifold_spectra.laplacian import assemble
from manifold_spectra.study import StudyConfig, bandwidth_schedule, run_study
from manifold_spectra.transport import estimate_eps, voronoi_partition

pytestmark = pytest.mark.slow


def _solve(manifold, kind, n, seed=0, density=None):
    density = uniform_density(manifold) if density is None else density
    cloud = sample(manifold, density, n, seed)
    h = bandwidth_schedule(n, manifold.m)
    graph = build_graph(cloud, h, make_kernel("indicator", manifold.m))
    op = assemble(graph, kind)
    return cloud, graph, op, smallest_k(op, 10, seed=seed)


def test_torus_first_cluster():
    _, _, _, result = _solve(torus(2), "un", 2000, seed=1)
    assert result.converged
    assert result.eigenvalues[0] == pytest.approx(0, abs=1e-10)
    cluster_mean = np.mean(result.eigenvalues[1:5])
    assert cluster_mean == pytest.approx(4 * np.pi**2, rel=0.25)


def test_sphere_random_walk_clusters():
    _, _, _, result = _solve(sphere(2), "rw", 2000, seed=1)
    assert result.converged
    assert np.mean(result.eigenvalues[1:4]) == pytest.approx(2, rel=0.25)
    assert result.eigenvalues[4] > 4


def test_rate_on_the_torus():
    config = StudyConfig(
        manifold=torus(2),
        density=uniform_density(torus(2)),
        n_grid=(500, 1000, 2000, 4000),
        seeds=(0, 1, 2),
        k=5,
        transport=False,
    )
    report = run_study(config)
    medians = [e for _, e in report.medians]
    assert len(medians) == 4
    assert all(b < a for a, b in zip(medians, medians[1:]))
    assert -0.6 <= report.slope <= -0.05
    for row in report.rows:
        if "disconnected" not in row.flags:
            assert row.eigenvalues[0] == pytest.approx(0, abs=1e-10)


def test_non_uniform_torus_against_galerkin():
    T2 = torus(2)
    config = StudyConfig(
        manifold=T2,
        density=cosine_torus_density(T2, 0.5),
        n_grid=(2000,),
        seeds=(0,),
        k=5,
        kind="rw",
        transport=False,
    )
    (row,) = run_study(config).rows
    assert "no-oracle" not in row.flags
    cluster = row.cluster(1)
    assert cluster is not None
    assert cluster.relative_error < 0.25


def test_voronoi_extension_tracks_interpolation():
    T2 = torus(2)
    density = uniform_density(T2)
    n = 2000
    cloud, graph, op, result = _solve(T2, "un", n, seed=3)
    quad = quadrature_cloud(T2, density, 20 * n, seed=3)
    plan = estimate_eps(cloud, quad)
    table = analytic_spectrum(T2, density, "un", 9)
    kernel = make_kernel("indicator", 2)
    u = result.eigenvectors[:, 1]
    interpolated = interpolate_I(u, plan, quad, graph.h, kernel)
    extended = voronoi_extend(u, voronoi_partition(cloud, quad), quad)

    # Distance to the matched continuum eigenfunction of the interpolation
    report = align_eigenspace(interpolated, table, 1)
    basis = table.entries[1].evaluate(quad.points)
    f = ContinuumField(basis @ report.coefficients, quad)
    scale = interpolated.inner(f) / f.norm() ** 2
    target = f.with_values(scale * f.values)
    err_i = np.linalg.norm(interpolated.values - target.values)
    err_v = np.linalg.norm(extended.values - target.values)
    assert err_v <= 2 * err_i + 0.05 * np.linalg.norm(target.values)


def test_transport_distance_scaling():
    T2 = torus(2)
    density = uniform_density(T2)
    eps = []
    for n in (250, 1000, 4000):
        cloud = sample(T2, density, n, seed=2)
        quad = quadrature_cloud(T2, density, 20 * n, seed=2)
        eps.append(estimate_eps(cloud, quad).eps_hat)
    assert all(b < a for a, b in zip(eps, eps[1:]))
    scaled = [
        e * np.sqrt(n) / np.log(n) ** 0.75 for e, n in zip(eps, (250, 1000, 4000))
    ]
    assert max(scaled) <= 5 * min(scaled)


def test_degrees_converge_to_density():
    T2 = torus(2)
    kernel = make_kernel("indicator", 2)
    errors = []
    for n in (500, 2000, 8000):
        cloud = sample(T2, uniform_density(T2), n, seed=4)
        graph = build_graph(cloud, bandwidth_schedule(n, 2), kernel)
        errors.append(kde_report(graph).max_error)
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_eigenvector_alignment_improves():
    T2 = torus(2)
    density = uniform_density(T2)
    table = analytic_spectrum(T2, density, "un", 9)
    kernel = make_kernel("indicator", 2)
    interpolated, extended = [], []
    for n in (1000, 4000):
        cloud, graph, _, result = _solve(T2, "un", n, seed=5)
        quad = quadrature_cloud(T2, density, 10 * n, seed=5)
        plan = estimate_eps(cloud, quad)
        u = result.eigenvectors[:, 1]
        Iu = interpolate_I(u, plan, quad, graph.h, kernel)
        u_bar = voronoi_extend(u, voronoi_partition(cloud, quad), quad)
        interpolated.append(align_eigenspace(Iu, table, 1).subspace_error)
        extended.append(align_eigenspace(u_bar, table, 1).subspace_error)
    for errors in (interpolated, extended):
        assert errors[1] <= 0.35
        assert errors[1] < errors[0]


def _gradient_energy(field, r, kernel, points, step=1e-4):
    """Mean of |grad Lambda_r field|^2 over points, by central differences."""
    manifold = field.cloud.manifold
    theta = manifold.intrinsic(points)
    total = np.zeros(theta.shape[0])
    for i in range(manifold.m):
        shift = np.zeros(manifold.m)
        shift[i] = step
        plus = smooth_Lambda(field, r, kernel, at=manifold.embed(theta + shift))
        minus = smooth_Lambda(field, r, kernel, at=manifold.embed(theta - shift))
        total += ((plus - minus) / (2 * step)) ** 2
    return float(total.mean())


def test_interpolation_energy_bound():
    T2 = torus(2)
    density = uniform_density(T2)
    kernel = make_kernel("indicator", 2)
    n, h = 1000, 0.3
    cloud = sample(T2, density, n, seed=6)
    quad = quadrature_cloud(T2, density, 20 * n, seed=6)
    plan = estimate_eps(cloud, quad)
    graph = build_graph(cloud, h, kernel)
    table = analytic_spectrum(T2, density, "un", 5)
    f = ContinuumField.from_function(table.entries[1].functions[0], quad)
    u = discretize_P(f, plan)
    # I u = Lambda_{h - 2 eps} P* u, evaluated off the quadrature cloud
    piecewise = extend_Pstar(u, plan, quad)
    at = sample(T2, density, 400, seed=7).points
    energy = _gradient_energy(piecewise, h - 2 * plan.eps_hat, kernel, at)
    assert 0 < energy <= 1.5 * dirichlet_b(graph, u)
