import numpy as np
import pytest

from manifold_spectra.geometry import (
    PointCloud,
    sample,
    sphere,
    torus,
    uniform_density,
)
from manifold_spectra.graph import build_graph
from manifold_spectra.kernels import make_kernel
from manifold_spectra.study import (
    WORKERS_ENV,
    ClusterError,
    ConvergenceReport,
    RowResult,
)


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="run the end-to-end convergence studies",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)


@pytest.fixture
def T2():
    return torus(2)


@pytest.fixture
def S2():
    return sphere(2)


@pytest.fixture
def indicator():
    return make_kernel("indicator", 2)


@pytest.fixture
def torus_cloud(T2):
    return sample(T2, uniform_density(T2), 400, seed=3)


@pytest.fixture
def sphere_cloud(S2):
    return sample(S2, uniform_density(S2), 300, seed=5)


@pytest.fixture
def torus_graph(torus_cloud, indicator):
    return build_graph(torus_cloud, 0.15, indicator)


@pytest.fixture
def two_point_cloud(S2):
    """
    Two points on the equator of S^2 and the chord between them.
    """
    t = 0.1
    points = np.array([[1.0, 0.0, 0.0], [np.cos(t), np.sin(t), 0.0]])
    chord = float(np.linalg.norm(points[0] - points[1]))
    return PointCloud(points, S2, uniform_density(S2)), chord


@pytest.fixture
def study_ini():
    return """
[study]
n = 30, 40
seeds = 0 1
k = 3

[manifold]
kind = torus
m = 2

[graph]
kind = un
h_rule = fixed
h_fixed = 0.35

[transport]
enabled = no
"""


def _synthetic_row(n: int, seed: int, error: float) -> RowResult:
    lam = 4 * np.pi**2
    return RowResult(
        n=n,
        seed=seed,
        h=0.3,
        eigenvalues=[0.0, lam * (1 + error)],
        residuals=[0.0, 1e-10],
        continuum=[0.0, lam],
        clusters=[
            ClusterError(0, 0, 1, 0.0, 0.0, None),
            ClusterError(1, 1, 2, lam, lam * (1 + error), error),
        ],
        kde_max_error=0.1,
        weight_discrepancy=0.0,
        n_edges=10 * n,
        timings={"total": 1.0},
    )


@pytest.fixture
def synthetic_report():
    """
    A two-n, two-seed report whose errors follow 0.2 n^(-1/4) exactly.
    """
    rows = [
        _synthetic_row(n, seed, 0.2 * n**-0.25)
        for n in (100, 400)
        for seed in (0, 1)
    ]
    return ConvergenceReport(
        config={"k": 2, "n": [100, 400], "seeds": [0, 1]},
        rows=rows,
        rate_index=1,
        medians=[(n, 0.2 * n**-0.25) for n in (100, 400)],
        slope=-0.25,
        stderr=0.0,
    )
