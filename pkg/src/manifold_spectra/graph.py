"""
Kernel-weighted random geometric graphs.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import sparse
from scipy.spatial.distance import cdist

from .geometry import PointCloud
from .kernels import KernelSpec
from .neighbors import iter_pairs_within

__all__ = [
    "WeightedGraph",
    "build_graph",
    "build_graph_bruteforce",
    "degrees",
    "dirichlet_b",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """
    A symmetric sparse weight matrix on ``n`` vertices.

    Parameters
    ----------
    weights : scipy.sparse.csr_array
        ``n x n`` symmetric weights with sorted column indices; only
        positive weights are stored.
    h : float
        Bandwidth in ambient length units.
    kernel : KernelSpec
        Kernel the weights were built from.
    cloud : PointCloud, optional
        Vertex positions, absent for hand-built graphs.
    self_loops : bool
        Whether the diagonal ``eta(0) / (n h^m)`` terms are present.
    metadata : dict
        Soft diagnostics, e.g. ``{"empty": True}``.
    """

    weights: sparse.csr_array
    h: float
    kernel: KernelSpec
    cloud: PointCloud | None = None
    self_loops: bool = True
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        """Number of vertices."""
        return int(self.weights.shape[0])

    @property
    def nnz(self) -> int:
        """Number of stored weights, counting both directions."""
        return int(self.weights.nnz)

    @property
    def m(self) -> int:
        """Intrinsic dimension used in the weight scaling."""
        return self.kernel.m

    @classmethod
    def from_weights(
        cls,
        weights: Any,
        kernel: KernelSpec,
        h: float = 1.0,
    ) -> "WeightedGraph":
        """
        Wrap a hand-built symmetric weight matrix.

        Raises
        ------
        ValueError
            If the matrix is not square, not symmetric or has negative
            entries.
        """
        w = sparse.csr_array(weights, dtype=np.float64)
        if w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.nnz and w.data.min() < 0:
            raise ValueError("weights must be nonnegative")
        if abs(w - w.T).sum() != 0:
            raise ValueError("weights must be symmetric")
        w.eliminate_zeros()
        w.sort_indices()
        return cls(
            weights=w,
            h=float(h),
            kernel=kernel,
            self_loops=bool(w.diagonal().any()),
        )


def _check_args(cloud: PointCloud, h: float, kernel: KernelSpec) -> None:
    if not h > 0:
        raise ValueError(f"bandwidth h must be positive, got {h}")
    if kernel.m != cloud.manifold.m:
        raise ValueError(
            f"kernel is normalized in dimension {kernel.m} but the cloud "
            f"lives on {cloud.manifold.name}"
        )


def _finish(
    rows: npt.NDArray[np.int64],
    cols: npt.NDArray[np.int64],
    dist: Array,
    cloud: PointCloud,
    h: float,
    kernel: KernelSpec,
    self_loops: bool,
    warn: bool = True,
) -> WeightedGraph:
    n = cloud.n
    w = kernel.eta(dist / h) / (n * h**kernel.m)
    keep = w > 0
    rows, cols, w = rows[keep], cols[keep], w[keep]

    diag = np.arange(n)
    diag_w = np.full(n, kernel.eta0 / (n * h**kernel.m))
    if not self_loops or kernel.eta0 <= 0:
        diag, diag_w = diag[:0], diag_w[:0]

    # Each unordered pair is stored once and mirrored, so symmetry is exact
    weights = sparse.coo_array(
        (
            np.concatenate([w, w, diag_w]),
            (np.concatenate([rows, cols, diag]), np.concatenate([cols, rows, diag])),
        ),
        shape=(n, n),
    ).tocsr()
    weights.sort_indices()

    metadata: dict[str, Any] = {"empty": weights.nnz == 0}
    if weights.nnz == 0 and warn:
        warnings.warn(
            f"graph on {n} vertices with h={h:.6g} has no edges",
            RuntimeWarning,
            stacklevel=3,
        )
    logger.info(
        "built graph: n=%d h=%.4g kernel=%s nnz=%d", n, h, kernel.profile, weights.nnz
    )
    return WeightedGraph(
        weights=weights,
        h=float(h),
        kernel=kernel,
        cloud=cloud,
        self_loops=self_loops,
        metadata=metadata,
    )


def build_graph(
    cloud: PointCloud,
    h: float,
    kernel: KernelSpec,
    self_loops: bool = True,
    warn: bool = True,
) -> WeightedGraph:
    """
    Build the ``h``-neighbourhood graph of a point cloud.

    Pairs within ambient distance ``h`` get weight
    ``eta(|x_i - x_j| / h) / (n h^m)`` where ``m`` is the intrinsic
    dimension. Neighbours are found by grid hashing with cell side ``h``.

    Parameters
    ----------
    cloud : PointCloud
    h : float
        Bandwidth, positive.
    kernel : KernelSpec
        Must be normalized in the cloud's intrinsic dimension.
    self_loops : bool
        Keep the ``j = i`` terms of the weight formula.
    warn : bool
        Emit the empty-graph warning. With ``False`` only
        ``metadata["empty"]`` records it and the global warning state is
        left alone, so worker threads can call this safely.

    Warns
    -----
    RuntimeWarning
        If the graph has no edges at all; ``metadata["empty"]`` is set too.
    """
    _check_args(cloud, h, kernel)
    blocks = list(iter_pairs_within(cloud.points, h))
    if blocks:
        rows = np.concatenate([b[0] for b in blocks])
        cols = np.concatenate([b[1] for b in blocks])
        dist = np.concatenate([b[2] for b in blocks])
    else:
        rows = cols = np.empty(0, dtype=np.int64)
        dist = np.empty(0)
    return _finish(rows, cols, dist, cloud, h, kernel, self_loops, warn)


def build_graph_bruteforce(
    cloud: PointCloud,
    h: float,
    kernel: KernelSpec,
    self_loops: bool = True,
) -> WeightedGraph:
    """
    Same graph as `build_graph` from an all-pairs distance matrix.

    Only meant for small clouds and for checking `build_graph`.
    """
    _check_args(cloud, h, kernel)
    dist = cdist(cloud.points, cloud.points)
    rows, cols = np.nonzero(np.triu(dist <= h, k=1))
    return _finish(
        rows.astype(np.int64),
        cols.astype(np.int64),
        dist[rows, cols],
        cloud,
        h,
        kernel,
        self_loops,
    )


def degrees(graph: WeightedGraph) -> Array:
    """Degree vector ``m_i = sum_j w_ij``, self-loop included."""
    return np.asarray(graph.weights.sum(axis=1), dtype=np.float64).reshape(-1)


def dirichlet_b(graph: WeightedGraph, u: npt.ArrayLike) -> float:
    """
    Discrete Dirichlet form.

    ``b(u) = 1 / (n sigma) * sum_{i, j} w_ij ((u_j - u_i) / h)^2`` with the
    sum over ordered pairs, which equals the unnormalized Laplacian's
    quadratic form in ``L^2`` of the empirical measure.
    """
    u_arr = np.asarray(u, dtype=np.float64).reshape(-1)
    if u_arr.size != graph.n:
        raise ValueError(f"u must have {graph.n} entries, got {u_arr.size}")
    w = graph.weights.tocoo()
    diff = u_arr[w.col] - u_arr[w.row]
    total = float(np.sum(w.data * diff**2))
    return total / (graph.n * graph.kernel.sigma * graph.h**2)
