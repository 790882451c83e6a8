"""
Operators between vertex functions and functions on the manifold.

Functions on the manifold are represented by their values on a quadrature
cloud drawn from the sampling measure ``mu``; every ``L^2(M, rho mu)``
integral is the quadrature average weighted by ``rho``.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import QuadratureTooCoarseError, RadiusTooSmallError, RegimeError
from .geometry import ClosedFormFunction, PointCloud, SpectrumTable
from .graph import WeightedGraph, degrees
from .kernels import KernelSpec
from .neighbors import iter_cross_pairs_within, iter_pairs_within
from .transport import TransportPlan, VoronoiPartition
from .util import canonical_kind

__all__ = [
    "ContinuumField",
    "SmoothingKernel",
    "AlignmentReport",
    "KDEReport",
    "weight_density",
    "discretize_P",
    "extend_Pstar",
    "smooth_Lambda",
    "interpolate_I",
    "voronoi_extend",
    "nonlocal_energy",
    "continuum_dirichlet_D",
    "align_eigenspace",
    "kde_report",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

#: Largest accepted condition number of an eigenspace Gram matrix
GRAM_CONDITION_LIMIT = 1e8
#: Norm below which a field cannot be aligned
ZERO_NORM = 1e-14


def weight_density(kind: str, cloud: PointCloud) -> Array:
    """
    Vertex weight ``rho`` of the limit of a Laplacian kind, on ``cloud``.

    ``1`` for the unnormalized kind, ``p`` for the random-walk and
    symmetric kinds.
    """
    if canonical_kind(kind) == "unnormalized":
        return np.ones(cloud.n)
    return cloud.pdf()


@dataclass(frozen=True, eq=False)
class ContinuumField:
    """
    A function on the manifold sampled on a quadrature cloud.

    Parameters
    ----------
    values : numpy.ndarray
        One value per quadrature point.
    cloud : PointCloud
        The quadrature cloud.
    rho : numpy.ndarray, optional
        Weight density per quadrature point, ones by default.
    """

    values: Array
    cloud: PointCloud
    rho: Any = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.cloud.n:
            raise ValueError(
                f"field has {values.size} values for {self.cloud.n} "
                "quadrature points"
            )
        rho = np.ones(values.size) if self.rho is None else self.rho
        rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), values.shape)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_function(
        cls,
        f: ClosedFormFunction,
        cloud: PointCloud,
        rho: Any = None,
    ) -> "ContinuumField":
        """Sample a closed-form function on the quadrature cloud."""
        return cls(f(cloud.points), cloud, rho)

    def with_values(self, values: npt.ArrayLike) -> "ContinuumField":
        """Same cloud and weight, new values."""
        return ContinuumField(np.asarray(values, dtype=np.float64), self.cloud, self.rho)

    def inner(self, other: "ContinuumField") -> float:
        """Quadrature ``<f, g>`` in ``L^2(M, rho mu)``."""
        if other.cloud is not self.cloud:
            raise ValueError("fields live on different quadrature clouds")
        return float(np.mean(self.values * other.values * self.rho))

    def norm(self) -> float:
        """Quadrature norm in ``L^2(M, rho mu)``."""
        return float(np.sqrt(np.mean(self.values**2 * self.rho)))


@dataclass(frozen=True)
class SmoothingKernel:
    """
    The kernel ``k_r(x, y) = psi(d(x, y) / r) / r^m``.
    """

    r: float
    kernel: KernelSpec

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"radius r must be positive, got {self.r}")

    def __call__(self, distances: npt.ArrayLike) -> Array:
        """Kernel values at geodesic distances."""
        d = np.asarray(distances, dtype=np.float64)
        return self.kernel.psi(d / self.r) / self.r**self.kernel.m

    def convolve(
        self,
        quadrature: PointCloud,
        values: npt.ArrayLike,
        at: npt.ArrayLike | None = None,
    ) -> tuple[Array, Array]:
        """
        Quadrature values of ``Lambda_r^0 f`` and ``theta = Lambda_r^0 1``.

        ``Lambda_r^0 f(x) = (1/N) sum_y f(y) k_r(x, y) / p(y)`` over the
        quadrature points ``y``; the evaluation points default to the
        quadrature cloud itself.
        """
        f = np.asarray(values, dtype=np.float64)
        inv_p = 1.0 / quadrature.pdf()
        N = quadrature.n
        manifold = quadrature.manifold
        pts = quadrature.points

        if at is None:
            n_eval = N
            num = np.zeros(N)
            den = np.zeros(N)
            for i, j, geo in _geodesic_pairs(pts, None, self.r, quadrature):
                k = self(geo)
                off = i != j
                num += np.bincount(i, weights=k * f[j] * inv_p[j], minlength=N)
                den += np.bincount(i, weights=k * inv_p[j], minlength=N)
                num += np.bincount(
                    j[off], weights=(k * f[i] * inv_p[i])[off], minlength=N
                )
                den += np.bincount(j[off], weights=(k * inv_p[i])[off], minlength=N)
        else:
            x_eval = manifold.check_points(at, "at")
            n_eval = x_eval.shape[0]
            num = np.zeros(n_eval)
            den = np.zeros(n_eval)
            for q, p, geo in _geodesic_pairs(x_eval, pts, self.r, quadrature):
                k = self(geo)
                num += np.bincount(q, weights=k * f[p] * inv_p[p], minlength=n_eval)
                den += np.bincount(q, weights=k * inv_p[p], minlength=n_eval)
        return num / N, den / N


def _geodesic_pairs(
    x: Array, y: Array | None, r: float, quadrature: PointCloud
) -> Iterator[tuple[IntArray, IntArray, Array]]:
    """Blocks of pairs within geodesic distance ``r``."""
    manifold = quadrature.manifold
    if y is None:
        blocks = iter_pairs_within(x, r, include_self=True)
        other = x
    else:
        blocks = iter_cross_pairs_within(x, y, r)
        other = y
    for i, j, _ in blocks:
        geo = manifold.distance(x[i], other[j])
        keep = geo <= r
        if np.any(keep):
            yield i[keep], j[keep], geo[keep]


def discretize_P(f: ContinuumField, plan: TransportPlan) -> Array:
    """
    ``(P f)(x_i)``: the average of ``f`` over the transport cell ``U_i``.
    """
    if f.cloud.n != plan.N:
        raise ValueError("field and plan use different quadrature sizes")
    # Averaging deviations from one member per cell keeps cell constants exact
    order = np.argsort(plan.assignment, kind="stable")
    ref = f.values[order[np.arange(plan.n) * plan.capacity]]
    dev = f.values - ref[plan.assignment]
    return ref + np.bincount(plan.assignment, weights=dev, minlength=plan.n) / plan.capacity


def extend_Pstar(
    u: npt.ArrayLike,
    plan: TransportPlan,
    quadrature: PointCloud,
    rho: Any = None,
) -> ContinuumField:
    """
    ``P* u``: the piecewise constant field equal to ``u(x_i)`` on ``U_i``.
    """
    u_arr = _vertex_function(u, plan.n)
    if quadrature.n != plan.N:
        raise ValueError("quadrature and plan sizes differ")
    return ContinuumField(u_arr[plan.assignment], quadrature, rho)


def smooth_Lambda(
    f: ContinuumField,
    r: float,
    kernel: KernelSpec,
    at: npt.ArrayLike | None = None,
) -> ContinuumField | Array:
    """
    Normalized smoothing ``Lambda_r f = Lambda_r^0 f / theta``.

    Constants are preserved exactly because ``theta`` comes from the same
    quadrature sum.

    Parameters
    ----------
    f : ContinuumField
    r : float
        Smoothing radius, positive.
    kernel : KernelSpec
        Kernel whose ``psi`` is used.
    at : array_like, optional
        Evaluation points. Defaults to the quadrature cloud, in which case a
        `ContinuumField` is returned; otherwise an array of values.

    Raises
    ------
    RadiusTooSmallError
        If an evaluation point has no quadrature point within ``r``.
    """
    smoother = SmoothingKernel(float(r), kernel)
    num, theta = smoother.convolve(f.cloud, f.values, at)
    empty = np.flatnonzero(theta <= 0)
    if empty.size:
        raise RadiusTooSmallError(int(empty[0]), float(r))
    out = num / theta
    # Rounding must not break exact constants
    if np.ptp(f.values) == 0:
        out = np.full_like(out, f.values[0])
    if at is not None:
        return out
    return f.with_values(out)


def interpolate_I(
    u: npt.ArrayLike,
    plan: TransportPlan,
    quadrature: PointCloud,
    h: float,
    kernel: KernelSpec,
    eps_hat: float | None = None,
    rho: Any = None,
) -> ContinuumField:
    """
    Interpolation ``I u = Lambda_{h - 2 eps} P* u``.

    Raises
    ------
    RegimeError
        If ``h - 2 eps_hat <= 0``; the bandwidth must dominate the transport
        distance, ``(m + 5) eps < h``.
    """
    eps = plan.eps_hat if eps_hat is None else float(eps_hat)
    radius = h - 2 * eps
    m = quadrature.manifold.m
    if radius <= 0:
        raise RegimeError(
            f"interpolation radius h - 2 eps = {radius:.4g} is not positive "
            f"(h={h:.4g}, eps={eps:.4g}); need (m + 5) eps < h"
        )
    if (m + 5) * eps >= h:
        logger.info(
            "interpolating outside the regime (m + 5) eps < h: h=%.4g eps=%.4g",
            h,
            eps,
        )
    field_ = extend_Pstar(u, plan, quadrature, rho)
    result = smooth_Lambda(field_, radius, kernel)
    assert isinstance(result, ContinuumField)
    return result


def voronoi_extend(
    u: npt.ArrayLike,
    partition: VoronoiPartition,
    quadrature: PointCloud,
    rho: Any = None,
) -> ContinuumField:
    """
    Voronoi extension: ``u`` of the Euclidean-nearest data point.
    """
    u_arr = _vertex_function(u, partition.n)
    if quadrature.n != partition.owner.size:
        raise ValueError("quadrature and partition sizes differ")
    return ContinuumField(u_arr[partition.owner], quadrature, rho)


def nonlocal_energy(
    f: ContinuumField,
    r: float,
    kernel: KernelSpec,
    region: npt.ArrayLike | None = None,
) -> float:
    """
    Nonlocal Dirichlet energy ``E_r(f, V)``.

    The double quadrature average of ``eta(d(x, y) / r) (f(y) - f(x))^2``
    over pairs within geodesic distance ``r``. ``region`` is an optional
    boolean mask restricting ``x`` to ``V``; the whole manifold by default.
    """
    if not r > 0:
        raise ValueError(f"radius r must be positive, got {r}")
    pts = f.cloud.points
    N = f.cloud.n
    mask = (
        np.ones(N, dtype=bool)
        if region is None
        else np.asarray(region, dtype=bool).reshape(-1)
    )
    total = 0.0
    for i, j, geo in _geodesic_pairs(pts, None, r, f.cloud):
        weight = kernel.eta(geo / r) * (f.values[j] - f.values[i]) ** 2
        # Unordered pairs stand for (x, y) and (y, x)
        total += float(np.sum(weight * (mask[i].astype(float) + mask[j])))
    return total / N**2


def continuum_dirichlet_D(f: ClosedFormFunction, quadrature: PointCloud) -> float:
    """
    Continuum Dirichlet form ``D(f) = int |grad f|^2 p^2 dVol``.

    The quadrature cloud samples ``p dVol``, so this is the quadrature
    average of ``|grad f|^2 p``.
    """
    grad = f.grad(quadrature.points)
    return float(np.mean(np.sum(grad**2, axis=1) * quadrature.pdf()))


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    """
    Alignment of a field with a continuum eigenspace.

    Attributes
    ----------
    index : int
        Entry of the spectrum table.
    lambda_continuum : float
    multiplicity : int
        Dimension of the eigenspace.
    subspace_error : float
        ``|g - Pi g| / |g|`` with ``Pi`` the ``rho mu`` projection.
    gap : float
        Distance to the neighbouring distinct eigenvalues.
    coefficients : numpy.ndarray
        Coefficients of the matched eigenfunction ``Pi g / |Pi g|`` in the
        table's basis of the eigenspace.
    grad_sup : float or None
        Largest quadrature value of ``|grad f|`` for the matched function,
        None when the basis has no gradients.
    lambda_discrete : float or None
        Discrete eigenvalue the field came from, if given.
    """

    index: int
    lambda_continuum: float
    multiplicity: int
    subspace_error: float
    gap: float
    coefficients: Array
    grad_sup: float | None = None
    lambda_discrete: float | None = None


def align_eigenspace(
    g: ContinuumField,
    table: SpectrumTable,
    index: int,
    lambda_discrete: float | None = None,
) -> AlignmentReport:
    """
    Project a field onto a continuum eigenspace.

    The eigenspace basis is orthonormalized in the quadrature ``rho mu``
    inner product by a QR factorization of the weighted basis matrix, which
    is the numerically stable form of Gram-Schmidt.

    Raises
    ------
    ValueError
        If ``g`` has (numerically) zero norm.
    QuadratureTooCoarseError
        If the basis Gram matrix has condition number above
        `GRAM_CONDITION_LIMIT` on the quadrature cloud.
    """
    if not 0 <= index < len(table):
        raise ValueError(f"index must be in [0, {len(table)}), got {index}")
    entry = table.entries[index]
    norm_g = g.norm()
    if norm_g < ZERO_NORM:
        raise ValueError("cannot align a field with zero norm")

    pts = g.cloud.points
    N = g.cloud.n
    sqrt_w = np.sqrt(g.rho / N)
    basis = entry.evaluate(pts)
    if N < entry.multiplicity:
        raise QuadratureTooCoarseError(
            f"{N} quadrature points cannot resolve eigenspace {index} of "
            f"dimension {entry.multiplicity}"
        )
    q, r = np.linalg.qr(sqrt_w[:, np.newaxis] * basis)
    cond = np.linalg.cond(r) ** 2
    if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        raise QuadratureTooCoarseError(
            f"Gram matrix of eigenspace {index} has condition number "
            f"{cond:.3g} on {N} quadrature points"
        )
    proj = q.T @ (sqrt_w * g.values)
    residual = np.sqrt(max(norm_g**2 - float(proj @ proj), 0.0))
    error = float(np.clip(residual / norm_g, 0.0, 1.0))

    proj_norm = float(np.linalg.norm(proj))
    if proj_norm > 0:
        coefficients = np.linalg.solve(r, proj / proj_norm)
    else:
        coefficients = np.zeros(entry.multiplicity)

    grad_sup = None
    if proj_norm > 0 and all(f.gradient is not None for f in entry.functions):
        grads = np.einsum("nkd,k->nd", entry.evaluate_gradients(pts), coefficients)
        grad_sup = float(np.sqrt(np.max(np.sum(grads**2, axis=1))))

    return AlignmentReport(
        index=index,
        lambda_continuum=entry.eigenvalue,
        multiplicity=entry.multiplicity,
        subspace_error=error,
        gap=table.gap(index),
        coefficients=coefficients,
        grad_sup=grad_sup,
        lambda_discrete=lambda_discrete,
    )


@dataclass(frozen=True, eq=False)
class KDEReport:
    """
    Degree-vs-density comparison.

    Attributes
    ----------
    max_error : float
        ``max_i |m_i - p(x_i)|``.
    errors : numpy.ndarray
        ``|m_i - p(x_i)|`` per vertex.
    lipschitz_term : float
        ``L_p h``.
    transport_term : float or None
        ``eta(0) m omega_m eps / h``, None without a transport estimate.
    curvature_term : float
        ``(K + 1 / R^2) h^2``.
    alpha : float
        Density bound.
    weight_discrepancy : float
        ``max_i |m_vec_i - rho(x_i)|`` for the vertex weights of ``kind``.
    """

    max_error: float
    errors: Array
    lipschitz_term: float
    transport_term: float | None
    curvature_term: float
    alpha: float
    weight_discrepancy: float

    def bound(self) -> float:
        """``L_p h + alpha * transport_term`` (transport term 0 if absent)."""
        return self.lipschitz_term + self.alpha * (self.transport_term or 0.0)


def kde_report(
    graph: WeightedGraph,
    eps_hat: float | None = None,
    kind: str = "unnormalized",
) -> KDEReport:
    """
    Compare graph degrees with the sampling density.

    Degrees ``m_i = (1 / (n h^m)) sum_j eta(|x_i - x_j| / h)`` are a kernel
    density estimate of ``p(x_i)``.
    """
    if graph.cloud is None:
        raise ValueError("kde_report needs a graph built from a point cloud")
    cloud = graph.cloud
    deg = degrees(graph)
    p = cloud.pdf()
    errors = np.abs(deg - p)
    h = graph.h
    kernel = graph.kernel
    manifold = cloud.manifold
    transport = (
        None
        if eps_hat is None
        else kernel.eta0 * kernel.m * kernel.omega * eps_hat / h
    )
    if canonical_kind(kind) == "unnormalized":
        discrepancy = 0.0
    else:
        discrepancy = float(errors.max()) if errors.size else 0.0
    return KDEReport(
        max_error=float(errors.max()) if errors.size else 0.0,
        errors=errors,
        lipschitz_term=cloud.density.lipschitz * h,
        transport_term=transport,
        curvature_term=(manifold.curvature_bound + 1 / manifold.reach**2) * h**2,
        alpha=cloud.density.alpha,
        weight_discrepancy=discrepancy,
    )


def _vertex_function(u: npt.ArrayLike, n: int) -> Array:
    arr = np.asarray(u, dtype=np.float64).reshape(-1)
    if arr.size != n:
        raise ValueError(f"vertex function must have {n} entries, got {arr.size}")
    return arr
