import numpy as np
import pytest

from manifold_spectra.continuum import (
    ContinuumField,
    SmoothingKernel,
    align_eigenspace,
    continuum_dirichlet_D,
    discretize_P,
    extend_Pstar,
    interpolate_I,
    kde_report,
    nonlocal_energy,
    smooth_Lambda,
    voronoi_extend,
    weight_density,
)
from manifold_spectra.errors import (
    QuadratureTooCoarseError,
    RadiusTooSmallError,
    RegimeError,
)
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
from manifold_spectra.transport import estimate_eps, voronoi_partition


@pytest.fixture(scope="module")
def torus_setup():
    """n = 500 data points with a 20-fold quadrature and their plan."""
    manifold = torus(2)
    density = uniform_density(manifold)
    cloud = sample(manifold, density, 500, seed=8)
    quad = quadrature_cloud(manifold, density, 10000, seed=8)
    plan = estimate_eps(cloud, quad)
    table = analytic_spectrum(manifold, density, "un", 9)
    return cloud, quad, plan, table


@pytest.fixture(scope="module")
def fine_quadrature():
    manifold = torus(2)
    return quadrature_cloud(manifold, uniform_density(manifold), 20000, seed=4)


def _mode(table, entry=1, member=0):
    return table.entries[entry].functions[member]


def test_weight_density(T2):
    cloud = sample(T2, cosine_torus_density(T2, 0.5), 50, seed=0)
    np.testing.assert_array_equal(weight_density("un", cloud), 1)
    np.testing.assert_array_equal(weight_density("rw", cloud), cloud.pdf())
    np.testing.assert_array_equal(weight_density("sym", cloud), cloud.pdf())


def test_field_validation(torus_setup, fine_quadrature):
    _, quad, _, _ = torus_setup
    with pytest.raises(ValueError, match="field has 3 values"):
        ContinuumField(np.zeros(3), quad)
    f = ContinuumField(np.ones(quad.n), quad)
    g = ContinuumField(np.ones(fine_quadrature.n), fine_quadrature)
    with pytest.raises(ValueError, match="different quadrature clouds"):
        f.inner(g)
    assert f.norm() == 1.0
    assert f.with_values(np.full(quad.n, 2.0)).inner(f) == 2.0


def test_discretize_constant(torus_setup):
    _, quad, plan, _ = torus_setup
    f = ContinuumField(np.full(quad.n, 0.1), quad)
    np.testing.assert_array_equal(discretize_P(f, plan), 0.1)


def test_discretize_single_cell(T2):
    density = uniform_density(T2)
    cloud = sample(T2, density, 1, seed=0)
    quad = quadrature_cloud(T2, density, 50, seed=0)
    plan = estimate_eps(cloud, quad)
    values = np.random.default_rng(0).standard_normal(50)
    Pf = discretize_P(ContinuumField(values, quad), plan)
    assert Pf[0] == pytest.approx(values.mean())


def test_discretize_near_isometry(torus_setup):
    _, quad, plan, table = torus_setup
    f = ContinuumField.from_function(_mode(table), quad)
    Pf = discretize_P(f, plan)
    assert np.mean(Pf**2) == pytest.approx(f.norm() ** 2, rel=0.1)


def test_extend_constant(torus_setup):
    cloud, quad, plan, _ = torus_setup
    field = extend_Pstar(np.full(cloud.n, -2.0), plan, quad)
    np.testing.assert_array_equal(field.values, -2.0)
    u = np.arange(cloud.n, dtype=float)
    np.testing.assert_array_equal(
        extend_Pstar(u, plan, quad).values, u[plan.assignment]
    )
    with pytest.raises(ValueError, match="must have 500 entries"):
        extend_Pstar(np.zeros(3), plan, quad)


def test_smoothing_constant(fine_quadrature):
    kernel = make_kernel("bump", 2)
    f = ContinuumField(np.full(fine_quadrature.n, 1.7), fine_quadrature)
    smoothed = smooth_Lambda(f, 0.1, kernel)
    np.testing.assert_array_equal(smoothed.values, 1.7)
    at = fine_quadrature.points[:5]
    np.testing.assert_array_equal(smooth_Lambda(f, 0.1, kernel, at=at), 1.7)


def test_smoothing_reproduces_smooth_functions(fine_quadrature):
    kernel = make_kernel("indicator", 2)
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 5)
    f = ContinuumField.from_function(_mode(table), fine_quadrature)
    smoothed = smooth_Lambda(f, 0.05, kernel)
    assert np.sqrt(np.mean((smoothed.values - f.values) ** 2)) < 0.1


def test_smoothing_radius_too_small(T2):
    density = uniform_density(T2)
    quad = quadrature_cloud(T2, density, 20, seed=0)
    f = ContinuumField(np.ones(20), quad)
    far = T2.embed([[0.5, 0.5]])
    with pytest.raises(RadiusTooSmallError, match="increase the radius") as err:
        smooth_Lambda(f, 1e-6, make_kernel("bump", 2), at=far)
    assert err.value.point == 0


@pytest.mark.parametrize("r", [0.1, 0.2])
def test_theta_on_the_sphere(r):
    S2 = sphere(2)
    density = uniform_density(S2)
    quad = quadrature_cloud(S2, density, 50000, seed=9)
    at = sample(S2, density, 100, seed=9).points
    kernel = make_kernel("indicator", 2)
    _, theta = SmoothingKernel(r, kernel).convolve(quad, np.ones(quad.n), at)
    assert np.max(np.abs(theta - 1)) <= 0.5


def test_smoothing_kernel():
    kernel = make_kernel("indicator", 2)
    k = SmoothingKernel(0.5, kernel)
    assert float(k(0.6)) == 0
    assert float(k(0.0)) == pytest.approx(float(kernel.psi(0.0)) / 0.25)
    with pytest.raises(ValueError, match="must be positive"):
        SmoothingKernel(0.0, kernel)


def test_interpolate_constant(torus_setup):
    cloud, quad, plan, _ = torus_setup
    h = 2 * plan.eps_hat + 0.05
    field = interpolate_I(
        np.full(cloud.n, 3.0), plan, quad, h, make_kernel("indicator", 2)
    )
    np.testing.assert_array_equal(field.values, 3.0)


def test_interpolate_regime(torus_setup):
    cloud, quad, plan, _ = torus_setup
    with pytest.raises(RegimeError, match="need \\(m \\+ 5\\) eps < h"):
        interpolate_I(
            np.ones(cloud.n),
            plan,
            quad,
            2 * plan.eps_hat,
            make_kernel("indicator", 2),
        )


def test_voronoi_extend(torus_setup):
    cloud, quad, _, _ = torus_setup
    partition = voronoi_partition(cloud, quad)
    field = voronoi_extend(np.full(cloud.n, 0.5), partition, quad)
    np.testing.assert_array_equal(field.values, 0.5)

    own = voronoi_partition(cloud, cloud)
    u = np.random.default_rng(1).standard_normal(cloud.n)
    np.testing.assert_array_equal(voronoi_extend(u, own, cloud).values, u)


def test_nonlocal_energy(fine_quadrature):
    kernel = make_kernel("indicator", 2)
    constant = ContinuumField(np.ones(fine_quadrature.n), fine_quadrature)
    assert nonlocal_energy(constant, 0.05, kernel) == 0

    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 5)
    f = ContinuumField.from_function(_mode(table), fine_quadrature)
    r = 0.05
    energy = nonlocal_energy(f, r, kernel)
    # E_r(f) is close to sigma r^{m+2} D(f) for smooth f
    expected = kernel.sigma * r**4 * continuum_dirichlet_D(
        _mode(table), fine_quadrature
    )
    assert energy == pytest.approx(expected, rel=0.1)

    half = fine_quadrature.manifold.intrinsic(fine_quadrature.points)[:, 0] < 0.5
    assert 0 < nonlocal_energy(f, r, kernel, region=half) < energy


@pytest.mark.parametrize("profile", ["bump", "gauss", "expbump"])
def test_indicator_energy_bounded_by_wider_kernel(fine_quadrature, profile):
    indicator = make_kernel("indicator", 2)
    kernel = make_kernel(profile, 2)
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 9)
    f = ContinuumField.from_function(_mode(table, 2, 1), fine_quadrature)
    r = 0.05
    narrow = nonlocal_energy(f, r, indicator) / indicator.eta0
    wide = nonlocal_energy(f, 2 * r, kernel) / kernel.eta_half
    assert 0 < narrow <= wide


def test_dirichlet_torus(T2):
    quad = quadrature_cloud(T2, uniform_density(T2), 100000, seed=2)
    table = analytic_spectrum(T2, uniform_density(T2), "un", 5)
    assert continuum_dirichlet_D(_mode(table), quad) == pytest.approx(
        4 * np.pi**2, rel=0.02
    )


def test_dirichlet_sphere():
    S2 = sphere(2)
    density = uniform_density(S2)
    quad = quadrature_cloud(S2, density, 100000, seed=2)
    table = analytic_spectrum(S2, density, "un", 4)
    z = table.entries[1].functions[2]
    expected = (8 * np.pi / 3) / (4 * np.pi) ** 2
    assert continuum_dirichlet_D(z, quad) == pytest.approx(expected, rel=0.02)
    constant = table.entries[0].functions[0]
    assert continuum_dirichlet_D(constant, quad) == 0


def test_align_member(fine_quadrature):
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 9)
    g = ContinuumField.from_function(_mode(table, 1, 2), fine_quadrature)
    report = align_eigenspace(g, table, 1, lambda_discrete=40.0)
    assert report.subspace_error == pytest.approx(0, abs=1e-6)
    assert report.multiplicity == 4
    assert report.lambda_continuum == pytest.approx(4 * np.pi**2)
    assert report.gap == pytest.approx(4 * np.pi**2)
    assert report.lambda_discrete == 40.0
    assert report.grad_sup == pytest.approx(2 * np.pi * np.sqrt(2), rel=0.02)


def test_align_other_cluster(fine_quadrature):
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 9)
    g = ContinuumField.from_function(_mode(table, 2, 0), fine_quadrature)
    assert align_eigenspace(g, table, 1).subspace_error >= 0.99


def test_align_errors(fine_quadrature, T2):
    table = analytic_spectrum(T2, uniform_density(T2), "un", 9)
    zero = ContinuumField(np.zeros(fine_quadrature.n), fine_quadrature)
    with pytest.raises(ValueError, match="zero norm"):
        align_eigenspace(zero, table, 1)
    ones = ContinuumField(np.ones(fine_quadrature.n), fine_quadrature)
    with pytest.raises(ValueError, match="index must be in"):
        align_eigenspace(ones, table, 7)

    tiny = quadrature_cloud(T2, uniform_density(T2), 3, seed=0)
    g = ContinuumField(np.ones(3), tiny)
    with pytest.raises(QuadratureTooCoarseError, match="cannot resolve"):
        align_eigenspace(g, table, 1)


def test_kde_single_point(T2):
    kernel = make_kernel("indicator", 2)
    cloud = sample(T2, uniform_density(T2), 1, seed=0)
    h = 0.2
    report = kde_report(build_graph(cloud, h, kernel))
    assert report.max_error == pytest.approx(abs(kernel.eta0 / h**2 - 1.0))


def test_kde_cosine_density(T2):
    density = cosine_torus_density(T2, 0.5)
    cloud = sample(T2, density, 2000, seed=6)
    kernel = make_kernel("indicator", 2)
    graph = build_graph(cloud, 0.15, kernel)
    report = kde_report(graph, eps_hat=0.05)
    assert report.lipschitz_term == pytest.approx(np.pi * 0.15)
    assert report.transport_term == pytest.approx(
        kernel.eta0 * 2 * kernel.omega * 0.05 / 0.15
    )
    assert report.alpha == density.alpha
    assert report.max_error <= 10 * report.bound()
    assert report.weight_discrepancy == 0
    assert report.curvature_term == pytest.approx(4 * np.pi**2 * 0.15**2)

    rw = kde_report(graph, kind="rw")
    assert rw.transport_term is None
    assert rw.weight_discrepancy == rw.max_error


def test_discrete_energy_of_projection(torus_setup):
    cloud, quad, plan, table = torus_setup
    graph = build_graph(cloud, 0.15, make_kernel("indicator", 2))
    for entry, member in [(1, 0), (1, 3), (2, 1)]:
        mode = _mode(table, entry, member)
        Pf = discretize_P(ContinuumField.from_function(mode, quad), plan)
        assert 0 < dirichlet_b(graph, Pf) <= 1.5 * continuum_dirichlet_D(mode, quad)


def test_energy_doubling(fine_quadrature):
    kernel = make_kernel("indicator", 2)
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 5)
    smooth = ContinuumField.from_function(_mode(table), fine_quadrature)
    x1 = fine_quadrature.manifold.intrinsic(fine_quadrature.points)[:, 0]
    step = smooth.with_values((x1 < 0.5).astype(float))
    r = 0.1
    for f in (smooth, step):
        ratio = nonlocal_energy(f, r, kernel) / nonlocal_energy(f, r / 2, kernel)
        # 2^(m+2) for smooth fields, 2^(m+1) across a jump
        assert 2**2 < ratio <= 20 * 2**2


def test_align_scale_invariant(fine_quadrature):
    table = analytic_spectrum(torus(2), uniform_density(torus(2)), "un", 9)
    values = (
        _mode(table, 1, 0)(fine_quadrature.points)
        + 0.5 * _mode(table, 2, 0)(fine_quadrature.points)
    )
    g = ContinuumField(values, fine_quadrature)
    base = align_eigenspace(g, table, 1).subspace_error
    assert 0.1 < base < 0.9
    rng = np.random.default_rng(6)
    scalars = rng.choice([-1, 1], 10) * 10 ** rng.uniform(-2, 2, 10)
    for c in scalars:
        scaled = align_eigenspace(g.with_values(c * values), table, 1)
        assert scaled.subspace_error == pytest.approx(base, rel=1e-9)
