"""
Graph Laplacians in the unnormalized, random-walk and symmetric forms.

Every operator is stored through its symmetric realization: a sparse
symmetric ``stiffness`` matrix ``A`` and a positive diagonal ``mass`` ``B``
with ``<L u, v>_B = u^T A v``. Eigenpairs of ``L`` are the generalized
eigenpairs of ``(A, B)``.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import sparse

from .errors import ConnectivityError
from .graph import WeightedGraph, degrees
from .util import canonical_kind

__all__ = ["LaplacianOperator", "assemble"]

Array = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class LaplacianOperator:
    """
    An assembled graph Laplacian.

    Attributes
    ----------
    kind : str
        ``"unnormalized"``, ``"random-walk"`` or ``"symmetric"``.
    graph : WeightedGraph
    degrees : numpy.ndarray
        Degree vector of the graph.
    scale : float
        ``2 / (sigma_eta h^2)``.
    matrix : scipy.sparse.csr_array
        The operator itself, ``(L u)_i``.
    stiffness : scipy.sparse.csr_array
        Symmetric matrix of the quadratic form ``<L u, u>``.
    mass : numpy.ndarray
        Diagonal of the inner product: ``1/n`` for the unnormalized and
        symmetric kinds, ``m_i / n`` for the random-walk kind.
    """

    kind: str
    graph: WeightedGraph
    degrees: Array
    scale: float
    matrix: sparse.csr_array
    stiffness: sparse.csr_array
    mass: Array

    @property
    def n(self) -> int:
        """Number of vertices."""
        return self.graph.n

    @property
    def inner_product(self) -> str:
        """Name of the inner product the operator is self-adjoint in."""
        return "degree" if self.kind == "random-walk" else "euclidean"

    @property
    def null_vector(self) -> Array:
        """Vector annihilated by the operator on a connected graph."""
        if self.kind == "symmetric":
            return np.sqrt(self.degrees)
        return np.ones(self.n)

    def matvec(self, u: npt.ArrayLike) -> Array:
        """Apply the operator to a vertex function."""
        u_arr = np.asarray(u, dtype=np.float64)
        if u_arr.shape[0] != self.n:
            raise ValueError(f"u must have {self.n} rows, got {u_arr.shape[0]}")
        return np.asarray(self.matrix @ u_arr)

    def inner(self, u: npt.ArrayLike, v: npt.ArrayLike) -> float:
        """Inner product ``sum_i mass_i u_i v_i``."""
        return float(
            np.sum(self.mass * np.asarray(u, dtype=np.float64) * np.asarray(v))
        )

    def quadratic_form(self, u: npt.ArrayLike) -> float:
        """``<L u, u>`` in the operator's inner product."""
        u_arr = np.asarray(u, dtype=np.float64)
        return float(u_arr @ (self.stiffness @ u_arr))

    def to_sparse(self) -> sparse.csr_array:
        """Explicit sparse matrix of the operator."""
        return self.matrix.copy()


def assemble(graph: WeightedGraph, kind: str) -> LaplacianOperator:
    """
    Assemble a graph Laplacian.

    With ``s = 2 / (sigma_eta h^2)``, ``D = diag(m)`` and weights ``W``:

    * unnormalized: ``L = s (D - W)``
    * random-walk: ``L = s D^{-1} (D - W)``
    * symmetric: ``L = s (I - D^{-1/2} W D^{-1/2})``

    Parameters
    ----------
    graph : WeightedGraph
    kind : str
        ``unnormalized``/``un``, ``random-walk``/``rw`` or
        ``symmetric``/``sym``.

    Raises
    ------
    ConnectivityError
        If a vertex has zero degree and ``kind`` is normalized.
    """
    kind = canonical_kind(kind)
    n = graph.n
    deg = degrees(graph)
    scale = 2.0 / (graph.kernel.sigma * graph.h**2)
    w = graph.weights
    laplacian = (sparse.diags_array(deg) - w).tocsr()

    if kind == "unnormalized":
        matrix = scale * laplacian
        stiffness = matrix / n
        mass = np.full(n, 1.0 / n)
    else:
        isolated = np.flatnonzero(deg <= 0)
        if isolated.size:
            raise ConnectivityError(isolated.tolist())
        if kind == "random-walk":
            matrix = scale * (sparse.diags_array(1.0 / deg) @ laplacian)
            stiffness = scale * laplacian / n
            mass = deg / n
        else:
            inv_sqrt = sparse.diags_array(1.0 / np.sqrt(deg))
            matrix = scale * (
                sparse.eye_array(n) - inv_sqrt @ w @ inv_sqrt
            )
            stiffness = matrix / n
            mass = np.full(n, 1.0 / n)

    matrix = sparse.csr_array(matrix)
    stiffness = sparse.csr_array(stiffness)
    matrix.sort_indices()
    stiffness.sort_indices()
    return LaplacianOperator(
        kind=kind,
        graph=graph,
        degrees=deg,
        scale=scale,
        matrix=matrix,
        stiffness=stiffness,
        mass=mass,
    )
