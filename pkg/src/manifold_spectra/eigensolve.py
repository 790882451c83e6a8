"""
Smallest eigenpairs of graph Laplacians.
"""

import logging
import warnings
from collections.abc import Iterator
from contextlib import ExitStack, contextmanager
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import lobpcg

from .laplacian import LaplacianOperator
from .util import Interval

__all__ = [
    "EigenResult",
    "dense_sym_eig",
    "smallest_k",
    "eigen_clusters",
    "lobpcg_quiet",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

#: Largest matrix handed to the dense solver
DENSE_MAX_SIZE = 3000
#: Relative symmetry tolerance of the dense solver
SYMMETRY_TOL = 1e-12
#: Eigenvalues closer than this times the largest one form a cluster
CLUSTER_TOL = 1e-8
#: Extra block vectors carried by LOBPCG
BLOCK_EXTRA = 5
#: Times LOBPCG is restarted from its own output with a tighter tolerance
MAX_RESTARTS = 3


@dataclass(frozen=True, eq=False)
class EigenResult:
    """
    Eigenpairs in ascending order.

    Attributes
    ----------
    eigenvalues : numpy.ndarray
        ``(k,)`` ascending eigenvalues.
    eigenvectors : numpy.ndarray
        ``(n, k)`` eigenvectors, orthonormal in the inner product with
        diagonal weights ``mass``.
    mass : numpy.ndarray
        ``(n,)`` diagonal of the inner product.
    inner_product : str
        ``"euclidean"`` (constant weights) or ``"degree"``.
    residuals : numpy.ndarray
        ``|A v - lambda B v| / |v|`` per pair.
    iterations : int
        Iterations used by the iterative solver, 0 for dense solves.
    converged : bool
        Whether every pair satisfies the residual contract.
    n_converged : int
        Length of the converged prefix.
    zero_multiplicity : int
        Number of exact zero eigenvalues reported from graph components.
    clusters : list of tuple of int
        ``[start, stop)`` index ranges of numerically degenerate eigenvalues.
    """

    eigenvalues: Array
    eigenvectors: Array
    mass: Array
    inner_product: str = "euclidean"
    residuals: Array = field(default_factory=lambda: np.empty(0))
    iterations: int = 0
    converged: bool = True
    n_converged: int = 0
    zero_multiplicity: int = 0
    clusters: list[tuple[int, int]] = field(default_factory=list)

    @property
    def k(self) -> int:
        """Number of eigenpairs."""
        return int(self.eigenvalues.size)


def eigen_clusters(
    eigenvalues: npt.ArrayLike, tol: float = CLUSTER_TOL
) -> list[tuple[int, int]]:
    """
    Group sorted eigenvalues closer than ``tol * max|lambda|`` into clusters.
    """
    values = np.asarray(eigenvalues, dtype=np.float64)
    if values.size == 0:
        return []
    gap = tol * max(float(np.abs(values).max()), np.finfo(float).tiny)
    breaks = np.flatnonzero(np.diff(values) > gap) + 1
    bounds = np.concatenate(([0], breaks, [values.size]))
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


@contextmanager
def lobpcg_quiet() -> Iterator[None]:
    """
    Ignore LOBPCG's own ``UserWarning`` about missed tolerances.

    `smallest_k` checks residuals itself, so that warning is noise. The
    filter is process wide: enter this from the main thread only, e.g.
    around a worker pool whose rows call `smallest_k` with ``warn=False``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


def _as_mass(b: npt.ArrayLike | None, n: int) -> Array:
    if b is None:
        return np.ones(n)
    if sparse.issparse(b):
        b = b.toarray()  # type: ignore[union-attr]
    arr = np.asarray(b, dtype=np.float64)
    if arr.ndim == 2:
        off = arr - np.diag(np.diag(arr))
        if np.any(off != 0):
            raise ValueError("B must be diagonal")
        arr = np.diag(arr).copy()
    if arr.shape != (n,):
        raise ValueError(f"B must have {n} diagonal entries")
    if np.any(arr <= 0):
        raise ValueError("B must be positive")
    return arr


def _residuals(
    a: sparse.sparray | Array, mass: Array, values: Array, vectors: Array
) -> tuple[Array, Array]:
    """Residual norms and the right-hand side of the residual contract."""
    av = np.asarray(a @ vectors)
    bv = mass[:, np.newaxis] * vectors
    res = np.linalg.norm(av - values * bv, axis=0)
    scale = np.linalg.norm(av, axis=0) + np.abs(values) * np.linalg.norm(
        bv, axis=0
    )
    return res, scale


def dense_sym_eig(a: npt.ArrayLike, b: npt.ArrayLike | None = None) -> EigenResult:
    """
    Full spectrum of a dense symmetric (generalized) eigenproblem.

    The problem ``A v = lambda B v`` with positive diagonal ``B`` is reduced
    to ``B^{-1/2} A B^{-1/2} y = lambda y`` and solved with
    `scipy.linalg.eigh`; the returned vectors ``v = B^{-1/2} y`` are
    ``B``-orthonormal.

    Parameters
    ----------
    a : array_like
        Symmetric ``(n, n)`` matrix, dense or sparse, ``n <= 3000``.
    b : array_like, optional
        Positive diagonal as a vector or a diagonal matrix.

    Raises
    ------
    ValueError
        If ``a`` is not square and symmetric to ``1e-12`` relative, or is
        too large.
    """
    if sparse.issparse(a):
        a = a.toarray()  # type: ignore[union-attr]
    mat = np.asarray(a, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"A must be square, got shape {mat.shape}")
    n = mat.shape[0]
    Interval(1, DENSE_MAX_SIZE).check(n, "dense problem size")
    size = max(float(np.abs(mat).max()), 1.0)
    if np.abs(mat - mat.T).max() > SYMMETRY_TOL * size:
        raise ValueError("A is not symmetric")

    mass = _as_mass(b, n)
    inv_sqrt = 1.0 / np.sqrt(mass)
    reduced = inv_sqrt[:, np.newaxis] * mat * inv_sqrt[np.newaxis, :]
    reduced = (reduced + reduced.T) / 2
    values, y = scipy.linalg.eigh(reduced)
    vectors = inv_sqrt[:, np.newaxis] * y
    res, _ = _residuals(mat, mass, values, vectors)
    return EigenResult(
        eigenvalues=values,
        eigenvectors=vectors,
        mass=mass,
        inner_product="euclidean" if b is None else "diagonal",
        residuals=res / np.linalg.norm(vectors, axis=0),
        n_converged=n,
        clusters=eigen_clusters(values),
    )


def _component_basis(op: LaplacianOperator) -> Array:
    """
    Null vectors of the operator, one per connected component, as columns
    orthonormal in the operator's inner product.
    """
    n_comp, labels = csgraph.connected_components(
        op.graph.weights, directed=False
    )
    basis = np.zeros((op.n, n_comp))
    basis[np.arange(op.n), labels] = op.null_vector
    norms = np.sqrt(np.sum(op.mass[:, np.newaxis] * basis**2, axis=0))
    return basis / norms


def _dense_route(
    op: LaplacianOperator, k: int, tol: float, warn: bool
) -> EigenResult:
    full = dense_sym_eig(op.stiffness, op.mass)
    values = full.eigenvalues[:k].copy()
    vectors = full.eigenvectors[:, :k].copy()
    null = _component_basis(op)
    zeros = min(null.shape[1], k)
    values[:zeros] = 0.0
    vectors[:, :zeros] = null[:, :zeros]
    return _finish(op, values, vectors, tol, iterations=0, zeros=zeros, warn=warn)


def _finish(
    op: LaplacianOperator,
    values: Array,
    vectors: Array,
    tol: float,
    iterations: int,
    zeros: int,
    warn: bool = True,
) -> EigenResult:
    res, scale = _residuals(op.stiffness, op.mass, values, vectors)
    ok = res <= tol * scale
    # Exact null vectors have zero residual up to rounding
    ok[:zeros] = res[:zeros] <= max(tol, 1e-12) * max(float(scale.max()), 1.0)
    bad = np.flatnonzero(~ok)
    n_converged = int(bad[0]) if bad.size else values.size
    converged = n_converged == values.size
    if not converged and warn:
        warnings.warn(
            f"only {n_converged} of {values.size} eigenpairs meet the "
            f"residual tolerance {tol:g}",
            RuntimeWarning,
            stacklevel=3,
        )
    return EigenResult(
        eigenvalues=values,
        eigenvectors=vectors,
        mass=op.mass.copy(),
        inner_product=op.inner_product,
        residuals=res / np.linalg.norm(vectors, axis=0),
        iterations=iterations,
        converged=converged,
        n_converged=n_converged,
        zero_multiplicity=zeros,
        clusters=eigen_clusters(values),
    )


def smallest_k(
    op: LaplacianOperator,
    k: int,
    tol: float = 1e-8,
    max_iter: int = 500,
    seed: int = 0,
    warn: bool = True,
) -> EigenResult:
    """
    Smallest ``k`` eigenpairs of a graph Laplacian.

    The operator's symmetric realization ``(A, B)`` is reduced to
    ``T = B^{-1/2} A B^{-1/2}`` and solved with LOBPCG (Jacobi
    preconditioner, block size ``k + 5``, starting block drawn from
    ``seed``). Null vectors of every connected component are deflated
    through LOBPCG's constraint block and reported as exact zero eigenvalues,
    so a connected graph always yields ``lambda_1 = 0`` with a constant
    eigenvector (``sqrt(m_i)`` for the symmetric kind). Eigenvectors are
    back-transformed with ``v = B^{-1/2} y`` and are ``B``-orthonormal.

    Small problems, where LOBPCG's block would not fit, use `dense_sym_eig`.

    Parameters
    ----------
    op : LaplacianOperator
    k : int
        Number of eigenpairs, between 1 and ``n``.
    tol : float
        Every pair must satisfy
        ``|A v - lambda B v| <= tol (|A v| + |lambda| |B v|)``.
    max_iter : int
        Iteration cap per LOBPCG run.
    seed : int
        Seed of the random starting block.
    warn : bool
        With ``False`` the global warning state is never touched: missed
        tolerances are only reported through ``converged`` and
        ``n_converged``, and LOBPCG's own ``UserWarning`` must be filtered
        by the caller. Use it from worker threads.

    Warns
    -----
    RuntimeWarning
        If some pairs miss the residual tolerance; the result then has
        ``converged=False`` and ``n_converged`` gives the usable prefix.
    """
    n = op.n
    k = Interval(1, n).check(k, "k")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    Interval(1, None).check(max_iter, "max_iter")

    null = _component_basis(op)
    zeros = min(null.shape[1], k)
    if zeros > 1:
        logger.warning(
            "graph has %d connected components; reporting them as zero "
            "eigenvalues",
            null.shape[1],
        )
    wanted = k - zeros
    block = wanted + BLOCK_EXTRA
    if wanted > 0 and n - null.shape[1] < 5 * block:
        logger.debug("n=%d too small for a block of %d, solving densely", n, block)
        return _dense_route(op, k, tol, warn)

    values = np.zeros(zeros)
    vectors = null[:, :zeros].copy()
    iterations = 0
    if wanted > 0:
        sqrt_mass = np.sqrt(op.mass)
        inv = sparse.diags_array(1.0 / sqrt_mass)
        reduced = sparse.csr_array(inv @ op.stiffness @ inv)
        diag = reduced.diagonal()
        precond = sparse.diags_array(
            np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
        )
        constraint = sqrt_mass[:, np.newaxis] * null
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, block))
        # LOBPCG's own stopping rule is absolute; tighten it until the
        # relative residual contract holds
        abs_tol = tol * max(float(np.abs(diag).max()), 1.0)
        for attempt in range(MAX_RESTARTS + 1):
            with ExitStack() as stack:
                if warn:
                    stack.enter_context(lobpcg_quiet())
                w, y, history = lobpcg(
                    reduced,
                    x,
                    M=precond,
                    Y=constraint,
                    tol=abs_tol,
                    maxiter=max_iter,
                    largest=False,
                    retResidualNormsHistory=True,
                )
            iterations += len(history)
            order = np.argsort(w)
            w, y = w[order], y[:, order]
            v = y[:, :wanted] / sqrt_mass[:, np.newaxis]
            res, scale = _residuals(op.stiffness, op.mass, w[:wanted], v)
            logger.debug(
                "LOBPCG attempt %d: %d iterations, worst relative residual %.3g",
                attempt,
                len(history),
                float(np.max(res / scale)),
            )
            if np.all(res <= tol * scale):
                break
            x = y
            abs_tol /= 10.0
        values = np.concatenate([values, w[:wanted]])
        vectors = np.column_stack([vectors, v])

    logger.info(
        "solved %s Laplacian: n=%d k=%d iterations=%d",
        op.kind,
        n,
        k,
        iterations,
    )
    return _finish(op, values, vectors, tol, iterations, zeros, warn)
