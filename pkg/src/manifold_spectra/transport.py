"""
Infinity optimal transport between empirical measures.

`bottleneck_match` solves the equal-size problem exactly. `estimate_eps`
approximates the transport distance between the data measure and the
continuum by a balanced bottleneck assignment of a fine quadrature cloud,
where every data point receives exactly ``N / n`` quadrature points.
`voronoi_partition` gives the nearest-neighbour cells used by the Voronoi
extension.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy import sparse
from scipy.sparse.csgraph import maximum_bipartite_matching, maximum_flow
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .geometry import ManifoldSpec, PointCloud, geodesic_pairs
from .util import Interval, as_points

__all__ = [
    "TransportPlan",
    "VoronoiPartition",
    "bottleneck_match",
    "threshold_matching",
    "estimate_eps",
    "voronoi_partition",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
Metric = Literal["geodesic", "euclidean"]

#: Relative tolerance used to merge equal distance thresholds
THRESHOLD_DEDUP = 1e-15
#: Fewest quadrature points per data point `estimate_eps` accepts by default
MIN_CAPACITY = 10
#: Neighbours inspected to resolve Voronoi ties
VORONOI_NEIGHBOURS = 8


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Balanced assignment of quadrature points to data points.

    Attributes
    ----------
    assignment : numpy.ndarray
        ``(N,)`` index of the data point each quadrature point is sent to.
    capacity : int
        ``N / n``, the number of quadrature points per data point.
    eps_hat : float
        Largest distance between an assigned pair.
    metric : str
        ``"geodesic"`` or ``"euclidean"``.
    n : int
        Number of data points.
    """

    assignment: IntArray
    capacity: int
    eps_hat: float
    metric: str
    n: int

    def __post_init__(self) -> None:
        counts = np.bincount(self.assignment, minlength=self.n)
        if counts.size != self.n or np.any(counts != self.capacity):
            raise RuntimeError(
                "transport plan is unbalanced: every data point must receive "
                f"exactly {self.capacity} quadrature points"
            )

    @property
    def N(self) -> int:
        """Number of quadrature points."""
        return int(self.assignment.size)

    @property
    def cells(self) -> list[IntArray]:
        """Quadrature indices of every cell ``U_i``, ascending."""
        order = np.argsort(self.assignment, kind="stable")
        return np.split(order, np.arange(1, self.n) * self.capacity)


@dataclass(frozen=True, eq=False)
class VoronoiPartition:
    """
    Nearest data point of every quadrature point.

    Attributes
    ----------
    owner : numpy.ndarray
        ``(N,)`` index of the Euclidean-nearest data point, lowest index on
        ties.
    n : int
        Number of data points.
    """

    owner: IntArray
    n: int

    @property
    def cells(self) -> list[IntArray]:
        """Quadrature indices of every Voronoi cell, ascending."""
        return [np.flatnonzero(self.owner == i) for i in range(self.n)]

    def masses(self) -> Array:
        """Fraction of the quadrature cloud owned by every data point."""
        return np.bincount(self.owner, minlength=self.n) / self.owner.size


def _distance_matrix(
    a: Array, b: Array, metric: Metric, manifold: ManifoldSpec | None
) -> Array:
    if metric == "euclidean":
        return cdist(a, b)
    if metric == "geodesic":
        if manifold is None:
            raise ValueError("the geodesic metric needs a manifold")
        return geodesic_pairs(manifold, a, b)
    raise ValueError(f"metric must be 'geodesic' or 'euclidean', got {metric!r}")


def _thresholds(distances: Array) -> Array:
    """Sorted distinct distances, keeping the largest of near-equal runs."""
    values = np.unique(distances)
    if values.size < 2:
        return values
    distinct = np.diff(values) > THRESHOLD_DEDUP * values[1:]
    return values[np.append(distinct, True)]


def threshold_matching(distances: npt.ArrayLike, threshold: float) -> IntArray | None:
    """
    Perfect matching using only pairs with ``distances <= threshold``.

    Returns
    -------
    numpy.ndarray or None
        ``perm`` with row ``i`` matched to column ``perm[i]``, or None if no
        perfect matching exists.
    """
    dist = np.asarray(distances, dtype=np.float64)
    rows, cols = np.nonzero(dist <= threshold)
    graph = sparse.csr_matrix(
        (np.ones(rows.size), (rows, cols)), shape=dist.shape
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.any(match < 0):
        return None
    return match.astype(np.int64)


def bottleneck_match(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    metric: Metric = "euclidean",
    manifold: ManifoldSpec | None = None,
) -> tuple[float, IntArray]:
    """
    Exact bottleneck-optimal perfect matching between equal-size sets.

    Binary search over the sorted distinct pairwise distances; a threshold
    is feasible when the graph of pairs within it has a perfect matching
    (Hopcroft-Karp via `scipy.sparse.csgraph.maximum_bipartite_matching`).

    Parameters
    ----------
    a, b : array_like
        ``(n, d)`` point sets.
    metric : {"euclidean", "geodesic"}
    manifold : ManifoldSpec, optional
        Needed for the geodesic metric.

    Returns
    -------
    cost : float
        The smallest achievable maximum pair distance.
    perm : numpy.ndarray
        ``a[i]`` is matched with ``b[perm[i]]``.
    """
    xa = as_points(a, "a")
    xb = as_points(b, "b")
    if xa.shape[0] != xb.shape[0]:
        raise ValueError(
            f"point sets must have equal size, got {xa.shape[0]} and "
            f"{xb.shape[0]}"
        )
    if xa.shape[0] == 0:
        raise ValueError("point sets must be nonempty")
    dist = _distance_matrix(xa, xb, metric, manifold)
    candidates = _thresholds(dist)

    lo, hi = 0, candidates.size - 1
    best = threshold_matching(dist, candidates[hi])
    assert best is not None
    while lo < hi:
        mid = (lo + hi) // 2
        perm = threshold_matching(dist, candidates[mid])
        if perm is None:
            lo = mid + 1
        else:
            hi, best = mid, perm
    cost = float(dist[np.arange(xa.shape[0]), best].max())
    return cost, best


class _FlowNetwork:
    """
    Source -> quadrature (1) -> data (1) -> sink (capacity) network over a
    fixed list of candidate edges.
    """

    def __init__(self, N: int, n: int, capacity: int):
        self.N = N
        self.n = n
        self.capacity = capacity
        self.source = 0
        self.sink = N + n + 1

    def solve(self, q: IntArray, x: IntArray) -> IntArray | None:
        """Assignment of every quadrature point, or None if infeasible."""
        N, n = self.N, self.n
        q_nodes = 1 + np.arange(N)
        x_nodes = 1 + N + np.arange(n)
        rows = np.concatenate(
            [np.zeros(N, dtype=np.int64), 1 + q, x_nodes]
        )
        cols = np.concatenate(
            [q_nodes, 1 + N + x, np.full(n, self.sink)]
        )
        caps = np.concatenate(
            [
                np.ones(N, dtype=np.int32),
                np.ones(q.size, dtype=np.int32),
                np.full(n, self.capacity, dtype=np.int32),
            ]
        )
        size = N + n + 2
        graph = sparse.csr_matrix((caps, (rows, cols)), shape=(size, size))
        result = maximum_flow(graph, self.source, self.sink)
        if result.flow_value < N:
            return None
        flow = sparse.csr_matrix(result.flow)[1 : N + 1, 1 + N : 1 + N + n]
        flow = flow.tocoo()
        used = flow.data > 0
        assignment = np.full(N, -1, dtype=np.int64)
        assignment[flow.row[used]] = flow.col[used]
        return assignment


def _candidate_edges(
    quad: Array,
    data: Array,
    radius: float,
    metric: Metric,
    manifold: ManifoldSpec,
) -> tuple[IntArray, IntArray, Array]:
    """Pairs (quadrature, data) within ``radius`` under ``metric``."""
    # Chords never exceed geodesics, so an ambient ball finds every candidate
    pairs = cKDTree(quad).sparse_distance_matrix(
        cKDTree(data), radius, output_type="ndarray"
    )
    q = pairs["i"].astype(np.int64)
    x = pairs["j"].astype(np.int64)
    dist = pairs["v"].astype(np.float64)
    if metric == "geodesic":
        dist = manifold.distance(quad[q], data[x])
        keep = dist <= radius
        q, x, dist = q[keep], x[keep], dist[keep]
    order = np.lexsort((x, q))
    return q[order], x[order], dist[order]


def _diameter(manifold: ManifoldSpec, metric: Metric) -> float:
    """Largest possible pair distance, padded against rounding."""
    if manifold.kind == "sphere":
        diam = np.pi if metric == "geodesic" else 2.0
    elif metric == "geodesic":
        diam = np.sqrt(manifold.m) / 2
    else:
        diam = 2 * manifold.reach * np.sqrt(manifold.m)
    return float(diam) * (1 + 1e-9)


def estimate_eps(
    cloud: PointCloud,
    quadrature: PointCloud,
    metric: Metric = "geodesic",
    min_capacity: int = MIN_CAPACITY,
) -> TransportPlan:
    """
    Balanced bottleneck assignment of the quadrature cloud to the data.

    Each data point receives exactly ``N / n`` quadrature points and the
    largest assigned distance ``eps_hat`` is minimal. Feasibility of a
    threshold is decided by a maximum flow through the network
    source -> quadrature -> data -> sink with unit capacities on the first
    two layers and ``N / n`` on the last, which is the capacitated form of
    matching against ``N / n`` copies of every data point. Candidate
    thresholds are the candidate pair distances, searched by bisection
    between the largest nearest-neighbour chord and the first feasible
    doubling radius.

    ``eps_hat`` estimates the transport distance between the data measure
    and the sampling measure at the resolution of the quadrature cloud,
    which needs ``N >= 10 n``. Smaller ``min_capacity`` values are meant
    for exact small examples; ``eps_hat`` is then coarse.

    Raises
    ------
    ValueError
        If ``N`` is not a multiple of ``n``, ``N / n < min_capacity`` or the
        clouds live on different manifolds.
    """
    n, N = cloud.n, quadrature.n
    if cloud.manifold != quadrature.manifold:
        raise ValueError("cloud and quadrature live on different manifolds")
    if N % n:
        raise ValueError(f"quadrature size {N} is not a multiple of n={n}")
    capacity = N // n
    Interval(1, None).check(min_capacity, "min_capacity")
    if capacity < min_capacity:
        raise ValueError(
            f"{capacity} quadrature points per data point, need at least "
            f"{min_capacity}; eps_hat would be coarse"
        )
    if capacity < MIN_CAPACITY:
        logger.warning(
            "only %d quadrature points per data point; eps_hat is coarse",
            capacity,
        )
    manifold = cloud.manifold
    data, quad = cloud.points, quadrature.points
    network = _FlowNetwork(N, n, capacity)

    nearest, _ = cKDTree(data).query(quad, k=1)
    lo = float(np.max(nearest))
    diameter = _diameter(manifold, metric)
    radius = max(lo, 1e-12)
    while True:
        q, x, dist = _candidate_edges(quad, data, radius, metric, manifold)
        assignment = network.solve(q, x)
        if assignment is not None or radius >= diameter:
            break
        radius = min(2.0 * radius, diameter)
    if assignment is None:
        raise RuntimeError("no balanced assignment found at the manifold diameter")

    candidates = _thresholds(dist[dist >= lo * (1 - 1e-12)])
    lo_i, hi_i = 0, candidates.size - 1
    best = assignment
    while lo_i < hi_i:
        mid = (lo_i + hi_i) // 2
        keep = dist <= candidates[mid]
        trial = network.solve(q[keep], x[keep])
        if trial is None:
            lo_i = mid + 1
        else:
            hi_i, best = mid, trial
    logger.debug("bisection over %d thresholds", candidates.size)

    if metric == "geodesic":
        realized = manifold.distance(quad, data[best])
    else:
        realized = np.linalg.norm(quad - data[best], axis=1)
    eps_hat = float(realized.max())
    logger.info(
        "transport: n=%d N=%d metric=%s eps_hat=%.5g", n, N, metric, eps_hat
    )
    return TransportPlan(
        assignment=best,
        capacity=capacity,
        eps_hat=eps_hat,
        metric=metric,
        n=n,
    )


def voronoi_partition(cloud: PointCloud, quadrature: PointCloud) -> VoronoiPartition:
    """
    Euclidean-nearest data point of every quadrature point.

    Exact distance ties go to the lowest data index.
    """
    data = cloud.points
    quad = as_points(quadrature.points)
    if quad.shape[1] != data.shape[1]:
        raise ValueError("cloud and quadrature must share the ambient dimension")
    k = min(cloud.n, VORONOI_NEIGHBOURS)
    dist, idx = cKDTree(data).query(quad, k=k)
    if k == 1:
        dist, idx = dist[:, np.newaxis], idx[:, np.newaxis]
    tied = dist == dist[:, :1]
    owner = np.where(tied, idx, np.iinfo(np.int64).max).min(axis=1)
    return VoronoiPartition(owner=owner.astype(np.int64), n=cloud.n)
