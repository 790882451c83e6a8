"""
Model manifolds, densities on them, sampling and ground-truth spectra.

Two manifolds are supported: the unit sphere ``S^m`` in ``R^{m+1}`` and the
flat torus ``T^m = [0, 1)^m`` embedded isometrically in ``R^{2m}`` by mapping
every coordinate to a circle of radius ``1/(2 pi)``.
"""

import hashlib
import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from scipy import special
from scipy.spatial.distance import cdist

from .errors import DomainError, InvalidDensityBoundError
from .util import Interval, as_points, canonical_kind

__all__ = [
    "ManifoldSpec",
    "DensitySpec",
    "PointCloud",
    "ClosedFormFunction",
    "SpectrumEntry",
    "SpectrumTable",
    "sphere",
    "torus",
    "uniform_density",
    "tilted_sphere_density",
    "cosine_torus_density",
    "make_density",
    "sample",
    "geodesic",
    "geodesic_pairs",
    "analytic_spectrum",
    "quadrature_cloud",
    "quadrature_inner",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

#: Tolerance used for every on-manifold check
MANIFOLD_TOLERANCE = 1e-12
#: Radius of each circle of the embedded flat torus
TORUS_RADIUS = 1.0 / (2.0 * np.pi)
#: Points drawn per independent random stream
SAMPLE_CHUNK = 4096
#: Proposals drawn before the rejection acceptance rate is checked
REJECTION_WARMUP = 2000

_SAMPLE_STREAM = 0
_QUADRATURE_STREAM = 1
_MANIFOLD_TAGS = {"sphere": 1, "torus": 2}


@dataclass(frozen=True)
class ManifoldSpec:
    """
    A model manifold together with its geometric constants.

    Parameters
    ----------
    kind : {"sphere", "torus"}
        Unit sphere ``S^m`` or flat unit torus ``T^m``.
    m : int
        Intrinsic dimension, at least 2.
    """

    kind: Literal["sphere", "torus"]
    m: int

    def __post_init__(self) -> None:
        if self.kind not in _MANIFOLD_TAGS:
            raise ValueError(
                f"kind must be 'sphere' or 'torus', got {self.kind!r}"
            )
        Interval(2, None).check(self.m, "intrinsic dimension m")

    @property
    def d(self) -> int:
        """Ambient dimension."""
        return self.m + 1 if self.kind == "sphere" else 2 * self.m

    @property
    def tag(self) -> int:
        """Integer tag used by the binary point-cloud format."""
        return _MANIFOLD_TAGS[self.kind]

    @property
    def volume(self) -> float:
        """Total Riemannian volume."""
        if self.kind == "sphere":
            k = self.m + 1
            return float(2 * np.pi ** (k / 2) / special.gamma(k / 2))
        return 1.0

    @property
    def curvature_bound(self) -> float:
        """Bound ``K`` on the absolute sectional curvature."""
        return 1.0 if self.kind == "sphere" else 0.0

    @property
    def injectivity_radius(self) -> float:
        """Injectivity radius ``i0``."""
        return float(np.pi) if self.kind == "sphere" else 0.5

    @property
    def reach(self) -> float:
        """Reach ``R`` of the embedding."""
        return 1.0 if self.kind == "sphere" else TORUS_RADIUS

    @property
    def name(self) -> str:
        """Short name such as ``S^2`` or ``T^3``."""
        return f"{'S' if self.kind == 'sphere' else 'T'}^{self.m}"

    def deviation(self, points: Any) -> Array:
        """
        Distance-like deviation of every point from the manifold.

        ``| |x| - 1 |`` for the sphere, the largest per-circle radius error
        for the torus.
        """
        x = as_points(points)
        if x.shape[1] != self.d:
            raise DomainError(
                f"{self.name} lives in R^{self.d}, got points in "
                f"R^{x.shape[1]}"
            )
        if self.kind == "sphere":
            return np.abs(np.linalg.norm(x, axis=1) - 1.0)
        radii = np.hypot(x[:, 0::2], x[:, 1::2])
        return np.max(np.abs(radii - TORUS_RADIUS), axis=1)

    def check_points(self, points: Any, name: str = "points") -> Array:
        """
        Return ``points`` as an array, raising if any is off the manifold.

        Raises
        ------
        DomainError
            If a point is further than `MANIFOLD_TOLERANCE` from the manifold.
        """
        x = as_points(points, name)
        dev = self.deviation(x)
        if dev.size and dev.max() > MANIFOLD_TOLERANCE:
            bad = int(np.argmax(dev))
            raise DomainError(
                f"{name}[{bad}] is {dev[bad]:.3g} away from {self.name} "
                f"(tolerance {MANIFOLD_TOLERANCE:g})"
            )
        return x

    def intrinsic(self, points: Any) -> Array:
        """
        Intrinsic torus coordinates in ``[0, 1)^m``.
        """
        if self.kind != "torus":
            raise ValueError("intrinsic coordinates are only defined on T^m")
        x = as_points(points)
        theta = np.arctan2(x[:, 1::2], x[:, 0::2]) / (2 * np.pi)
        return np.mod(theta, 1.0)

    def embed(self, theta: Any) -> Array:
        """
        Embed intrinsic torus coordinates into ``R^{2m}``.
        """
        if self.kind != "torus":
            raise ValueError("embed is only defined on T^m")
        t = as_points(theta, "theta")
        if t.shape[1] != self.m:
            raise ValueError(f"theta must have {self.m} columns")
        out = np.empty((t.shape[0], self.d))
        out[:, 0::2] = TORUS_RADIUS * np.cos(2 * np.pi * t)
        out[:, 1::2] = TORUS_RADIUS * np.sin(2 * np.pi * t)
        return out

    def tangent_frame(self, points: Any) -> Array:
        """
        Orthonormal tangent frame of the torus, shape ``(n, m, 2m)``.

        Frame vector ``i`` is the unit tangent of circle ``i``.
        """
        theta = self.intrinsic(points)
        frame = np.zeros((theta.shape[0], self.m, self.d))
        for i in range(self.m):
            frame[:, i, 2 * i] = -np.sin(2 * np.pi * theta[:, i])
            frame[:, i, 2 * i + 1] = np.cos(2 * np.pi * theta[:, i])
        return frame

    def uniform_points(
        self, rng: np.random.Generator, n: int
    ) -> Array:
        """Draw ``n`` points from the normalized volume measure."""
        if self.kind == "sphere":
            g = rng.standard_normal((n, self.d))
            return g / np.linalg.norm(g, axis=1, keepdims=True)
        return self.embed(rng.random((n, self.m)))

    def distance(self, x: Array, y: Array) -> Array:
        """
        Row-wise geodesic distance between equally shaped point arrays.

        No on-manifold check is made; see `geodesic` for the checked version.
        """
        if self.kind == "sphere":
            chord = np.linalg.norm(x - y, axis=-1)
            return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
        delta = np.abs(self.intrinsic(x) - self.intrinsic(y))
        delta = np.minimum(delta, 1.0 - delta)
        return np.sqrt(np.sum(delta**2, axis=-1))


def sphere(m: int = 2) -> ManifoldSpec:
    """Unit sphere ``S^m`` in ``R^{m+1}``."""
    return ManifoldSpec("sphere", m)


def torus(m: int = 2) -> ManifoldSpec:
    """Flat unit torus ``T^m`` embedded in ``R^{2m}``."""
    return ManifoldSpec("torus", m)


@dataclass(frozen=True)
class DensitySpec:
    """
    A probability density with respect to the Riemannian volume.

    Parameters
    ----------
    form : {"uniform", "analytic"}
        Whether the density is constant.
    alpha : float
        Bound with ``1/alpha <= p(x) <= alpha``.
    lipschitz : float
        Lipschitz constant ``L_p``.
    pdf : callable
        Maps an ``(n, d)`` array of ambient points to ``n`` density values.
    name : str
        Identifier used in reports and configuration files.
    amplitude : float
        Shape parameter of the named analytic families (0 for uniform).
    envelope : float, optional
        Bound on ``p(x) * vol(M)`` used as the rejection envelope. Defaults
        to ``alpha``.
    """

    form: Literal["uniform", "analytic"]
    alpha: float
    lipschitz: float
    pdf: Callable[[Array], Array] = field(compare=False, repr=False)
    name: str = "uniform"
    amplitude: float = 0.0
    envelope: float | None = None

    def __post_init__(self) -> None:
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.lipschitz < 0:
            raise ValueError("lipschitz constant must be nonnegative")

    def __call__(self, points: Any) -> Array:
        """Evaluate the density at ``points``."""
        x = as_points(points)
        return np.broadcast_to(
            np.asarray(self.pdf(x), dtype=np.float64), (x.shape[0],)
        ).copy()

    @property
    def is_uniform(self) -> bool:
        """True if the density is constant."""
        return self.form == "uniform"

    @property
    def rejection_bound(self) -> float:
        """Envelope ``c`` with ``p(x) vol(M) <= c``."""
        return self.alpha if self.envelope is None else self.envelope


def uniform_density(manifold: ManifoldSpec) -> DensitySpec:
    """The normalized volume measure ``1 / vol(M)``."""
    vol = manifold.volume
    return DensitySpec(
        form="uniform",
        alpha=max(vol, 1.0 / vol),
        lipschitz=0.0,
        pdf=lambda x: np.full(x.shape[0], 1.0 / vol),
        name="uniform",
        envelope=1.0,
    )


def tilted_sphere_density(
    manifold: ManifoldSpec, amplitude: float = 0.5
) -> DensitySpec:
    """
    Density ``p(x) = (1 + a x_{m+1}) / vol(S^m)`` on the sphere.
    """
    if manifold.kind != "sphere":
        raise ValueError("the tilted density is defined on S^m only")
    if not 0 < abs(amplitude) < 1:
        raise ValueError("amplitude must satisfy 0 < |a| < 1")
    vol = manifold.volume
    a = float(amplitude)
    return DensitySpec(
        form="analytic",
        alpha=max((1 + abs(a)) / vol, vol / (1 - abs(a)), 1.0),
        lipschitz=abs(a) / vol,
        pdf=lambda x: (1.0 + a * x[:, -1]) / vol,
        name="tilted",
        amplitude=a,
        envelope=1 + abs(a),
    )


def cosine_torus_density(
    manifold: ManifoldSpec, amplitude: float = 0.5
) -> DensitySpec:
    """
    Density ``p(theta) = 1 + a cos(2 pi theta_1)`` on the flat torus.
    """
    if manifold.kind != "torus":
        raise ValueError("the cosine density is defined on T^m only")
    if not 0 < abs(amplitude) < 1:
        raise ValueError("amplitude must satisfy 0 < |a| < 1")
    a = float(amplitude)

    def pdf(x: Array) -> Array:
        # cos(2 pi theta_1) is the first embedding coordinate over the radius
        return 1.0 + a * x[:, 0] / TORUS_RADIUS

    return DensitySpec(
        form="analytic",
        alpha=max(1 + abs(a), 1 / (1 - abs(a))),
        lipschitz=2 * np.pi * abs(a),
        pdf=pdf,
        name="cosine",
        amplitude=a,
        envelope=1 + abs(a),
    )


def make_density(
    manifold: ManifoldSpec, name: str, amplitude: float = 0.5
) -> DensitySpec:
    """
    Build one of the named densities: ``uniform``, ``tilted`` or ``cosine``.
    """
    if name == "uniform":
        return uniform_density(manifold)
    if name == "tilted":
        return tilted_sphere_density(manifold, amplitude)
    if name == "cosine":
        return cosine_torus_density(manifold, amplitude)
    raise ValueError(
        f"unknown density {name!r}; expected uniform, tilted or cosine"
    )


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    Sample points on a manifold.

    Parameters
    ----------
    points : numpy.ndarray
        ``(n, d)`` ambient coordinates.
    manifold : ManifoldSpec
        Manifold the points lie on.
    density : DensitySpec
        Density the points were drawn from.
    seed : int
        Seed of the random streams that produced the points.
    """

    points: Array
    manifold: ManifoldSpec
    density: DensitySpec
    seed: int = 0

    def __post_init__(self) -> None:
        pts = self.manifold.check_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        """Ambient dimension."""
        return int(self.points.shape[1])

    def pdf(self) -> Array:
        """Generating density evaluated at every point."""
        return self.density(self.points)

    def content_hash(self) -> str:
        """SHA-256 of the manifold tag, seed and coordinates."""
        digest = hashlib.sha256()
        digest.update(
            f"{self.manifold.kind}:{self.manifold.m}:{self.seed}".encode()
        )
        digest.update(self.points.tobytes())
        return digest.hexdigest()


def _stream(seed: int, stream: int, chunk: int) -> np.random.Generator:
    """Independent generator for one chunk of one stream."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(stream, chunk))
    )


def _draw_chunk(
    manifold: ManifoldSpec,
    density: DensitySpec,
    size: int,
    rng: np.random.Generator,
) -> Array:
    """Draw ``size`` points, by rejection from the uniform measure if needed."""
    if density.is_uniform:
        return manifold.uniform_points(rng, size)

    bound = density.rejection_bound
    vol = manifold.volume
    accepted: list[Array] = []
    n_accepted = 0
    n_proposed = 0
    batch = max(64, int(math.ceil(size * bound * 1.2)))
    while n_accepted < size:
        proposal = manifold.uniform_points(rng, batch)
        ratio = density(proposal) * vol / bound
        if ratio.max() > 1.0 + 1e-12:
            raise InvalidDensityBoundError(
                f"p(x) vol(M) reaches {ratio.max() * bound:.6g}, above the "
                f"rejection bound {bound:.6g} of density {density.name!r}"
            )
        keep = rng.random(batch) < ratio
        accepted.append(proposal[keep])
        n_accepted += int(keep.sum())
        n_proposed += batch
        if (
            n_proposed >= REJECTION_WARMUP
            and n_accepted / n_proposed < 1.0 / (10.0 * bound)
        ):
            raise InvalidDensityBoundError(
                f"acceptance rate {n_accepted / n_proposed:.3g} is below "
                f"1/(10 * {bound:.6g}); the density is not normalized or "
                "its bound is far too loose"
            )
    return np.concatenate(accepted)[:size]


def _draw(
    manifold: ManifoldSpec,
    density: DensitySpec,
    n: int,
    seed: int,
    stream: int,
) -> Array:
    chunks = []
    for chunk, start in enumerate(range(0, n, SAMPLE_CHUNK)):
        size = min(SAMPLE_CHUNK, n - start)
        chunks.append(
            _draw_chunk(manifold, density, size, _stream(seed, stream, chunk))
        )
    return np.concatenate(chunks) if chunks else np.empty((0, manifold.d))


def sample(
    manifold: ManifoldSpec, density: DensitySpec, n: int, seed: int
) -> PointCloud:
    """
    Draw ``n`` i.i.d. points from ``p dVol``.

    Uniform densities use normalized Gaussians on the sphere and uniform
    intrinsic coordinates on the torus; other densities use rejection
    sampling with envelope ``bound * uniform``. Every block of
    `SAMPLE_CHUNK` points has its own stream derived from ``(seed, block)``,
    so the result depends on nothing but the arguments.

    Raises
    ------
    InvalidDensityBoundError
        If the density exceeds its envelope or the acceptance rate collapses.
    """
    Interval(1, None).check(n, "n")
    points = _draw(manifold, density, n, seed, _SAMPLE_STREAM)
    return PointCloud(points, manifold, density, seed)


def quadrature_cloud(
    manifold: ManifoldSpec, density: DensitySpec, N: int, seed: int
) -> PointCloud:
    """
    Draw the Monte Carlo quadrature cloud of size ``N``.

    The cloud uses a random stream disjoint from `sample` with the same seed,
    so it is independent of the data points.
    """
    Interval(1, None).check(N, "N")
    points = _draw(manifold, density, N, seed, _QUADRATURE_STREAM)
    return PointCloud(points, manifold, density, seed)


def quadrature_inner(
    f: Any, g: Any, rho: Any = 1.0
) -> float:
    """
    Quadrature value of ``<f, g>`` in ``L^2(M, rho mu)``.

    The average of ``f * g * rho`` over the quadrature points.
    """
    f_arr = np.asarray(f, dtype=np.float64)
    g_arr = np.asarray(g, dtype=np.float64)
    rho_arr = np.broadcast_to(np.asarray(rho, dtype=np.float64), f_arr.shape)
    return float(np.mean(f_arr * g_arr * rho_arr))


def geodesic(manifold: ManifoldSpec, x: Any, y: Any) -> Any:
    """
    Geodesic distance between ``x`` and ``y``.

    Accepts single points (returns a float) or equally shaped ``(n, d)``
    arrays (returns ``n`` distances). On the sphere this is
    ``arccos(<x, y>)``, evaluated as ``2 arcsin(|x - y| / 2)`` which is the
    same angle without the loss of precision near zero; on the torus it is
    the periodic distance of intrinsic coordinates.

    Raises
    ------
    DomainError
        If either point is off the manifold.
    """
    single = np.ndim(x) == 1 and np.ndim(y) == 1
    xa = manifold.check_points(x, "x")
    ya = manifold.check_points(y, "y")
    if xa.shape != ya.shape:
        raise ValueError(f"shape mismatch: {xa.shape} vs {ya.shape}")
    out = manifold.distance(xa, ya)
    return float(out[0]) if single else out


def geodesic_pairs(manifold: ManifoldSpec, x: Any, y: Any) -> Array:
    """
    Matrix of geodesic distances between every point of ``x`` and ``y``.
    """
    xa = manifold.check_points(x, "x")
    ya = manifold.check_points(y, "y")
    if manifold.kind == "sphere":
        chord = cdist(xa, ya)
        return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    delta = np.abs(
        manifold.intrinsic(xa)[:, np.newaxis, :]
        - manifold.intrinsic(ya)[np.newaxis, :, :]
    )
    delta = np.minimum(delta, 1.0 - delta)
    return np.sqrt(np.sum(delta**2, axis=-1))


@dataclass(frozen=True)
class ClosedFormFunction:
    """
    A function on the manifold with an analytic tangential gradient.

    Parameters
    ----------
    value : callable
        Maps ``(n, d)`` ambient points to ``n`` values.
    gradient : callable, optional
        Maps ``(n, d)`` ambient points to ``(n, d)`` tangent vectors.
    name : str
        Human readable label.
    """

    value: Callable[[Array], Array] = field(repr=False)
    gradient: Callable[[Array], Array] | None = field(
        default=None, repr=False
    )
    name: str = ""

    def __call__(self, points: Any) -> Array:
        """Evaluate the function."""
        return np.asarray(self.value(as_points(points)), dtype=np.float64)

    def grad(self, points: Any) -> Array:
        """Evaluate the tangential gradient."""
        if self.gradient is None:
            raise ValueError(f"function {self.name!r} has no gradient")
        return np.asarray(self.gradient(as_points(points)), dtype=np.float64)


@dataclass(frozen=True)
class SpectrumEntry:
    """One eigenvalue together with a basis of its eigenspace."""

    eigenvalue: float
    multiplicity: int
    functions: tuple[ClosedFormFunction, ...] = field(repr=False)

    def evaluate(self, points: Any) -> Array:
        """Basis values, shape ``(n, multiplicity)``."""
        x = as_points(points)
        return np.column_stack([f(x) for f in self.functions])

    def evaluate_gradients(self, points: Any) -> Array:
        """Basis gradients, shape ``(n, multiplicity, d)``."""
        x = as_points(points)
        return np.stack([f.grad(x) for f in self.functions], axis=1)


@dataclass(frozen=True)
class SpectrumTable:
    """
    Distinct eigenvalues of a limit operator, in increasing order.
    """

    entries: tuple[SpectrumEntry, ...]
    laplacian_kind: str

    def __post_init__(self) -> None:
        values = [e.eigenvalue for e in self.entries]
        if any(b <= a for a, b in itertools.pairwise(values)):
            raise ValueError("spectrum entries must be strictly increasing")

    def __len__(self) -> int:
        """Number of distinct eigenvalues."""
        return len(self.entries)

    @property
    def total_multiplicity(self) -> int:
        """Sum of multiplicities."""
        return sum(e.multiplicity for e in self.entries)

    def eigenvalues(self, count: int | None = None) -> Array:
        """Eigenvalues repeated by multiplicity, optionally truncated."""
        flat = np.repeat(
            [e.eigenvalue for e in self.entries],
            [e.multiplicity for e in self.entries],
        ).astype(np.float64)
        return flat if count is None else flat[:count]

    def slots(self) -> list[tuple[int, int]]:
        """Index range ``[start, stop)`` of every entry in the flat list."""
        out = []
        start = 0
        for e in self.entries:
            out.append((start, start + e.multiplicity))
            start += e.multiplicity
        return out

    def gap(self, index: int) -> float:
        """Distance from entry ``index`` to its nearest distinct neighbour."""
        lam = self.entries[index].eigenvalue
        gaps = []
        if index > 0:
            gaps.append(lam - self.entries[index - 1].eigenvalue)
        if index + 1 < len(self.entries):
            gaps.append(self.entries[index + 1].eigenvalue - lam)
        return float(min(gaps)) if gaps else float("inf")


def _sphere_harmonic_dimension(m: int, degree: int) -> int:
    """Dimension of degree-``degree`` spherical harmonics on ``S^m``."""
    lower = math.comb(degree + m - 2, m) if degree >= 2 else 0
    return math.comb(degree + m, m) - lower


def _coordinate_function(i: int) -> ClosedFormFunction:
    def value(x: Array) -> Array:
        return x[:, i].copy()

    def gradient(x: Array) -> Array:
        grad = -x[:, i, np.newaxis] * x
        grad[:, i] += 1.0
        return grad

    return ClosedFormFunction(value, gradient, name=f"x_{i}")


def _zonal_function(
    degree: int, order: float, pole: Array
) -> ClosedFormFunction:
    """Zonal harmonic ``C_l^{(order)}(<x, pole>)`` and its gradient."""

    def value(x: Array) -> Array:
        t = np.clip(x @ pole, -1.0, 1.0)
        return special.eval_gegenbauer(degree, order, t)

    def gradient(x: Array) -> Array:
        t = np.clip(x @ pole, -1.0, 1.0)
        dc = 2 * order * special.eval_gegenbauer(degree - 1, order + 1, t)
        return dc[:, np.newaxis] * (pole[np.newaxis, :] - t[:, None] * x)

    return ClosedFormFunction(value, gradient, name=f"C_{degree}")


def _constant_function() -> ClosedFormFunction:
    return ClosedFormFunction(
        lambda x: np.ones(x.shape[0]),
        lambda x: np.zeros_like(x),
        name="1",
    )


def _sphere_spectrum(
    manifold: ManifoldSpec, kind: str, count: int
) -> SpectrumTable:
    m = manifold.m
    scale = 1.0 / manifold.volume if kind == "unnormalized" else 1.0
    entries = []
    total = 0
    degree = 0
    while total < count:
        dim = _sphere_harmonic_dimension(m, degree)
        if degree == 0:
            funcs: Sequence[ClosedFormFunction] = [_constant_function()]
        elif degree == 1:
            funcs = [_coordinate_function(i) for i in range(manifold.d)]
        else:
            # Zonal harmonics around generic poles span the eigenspace
            rng = np.random.default_rng(degree)
            poles = rng.standard_normal((dim, manifold.d))
            poles /= np.linalg.norm(poles, axis=1, keepdims=True)
            funcs = [_zonal_function(degree, (m - 1) / 2, p) for p in poles]
        entries.append(
            SpectrumEntry(
                eigenvalue=scale * degree * (degree + m - 1),
                multiplicity=dim,
                functions=tuple(funcs),
            )
        )
        total += dim
        degree += 1
    return SpectrumTable(tuple(entries), kind)


def _torus_mode(
    manifold: ManifoldSpec, k: tuple[int, ...], trig: Literal["cos", "sin"]
) -> ClosedFormFunction:
    kvec = np.asarray(k, dtype=np.float64)

    def phase(x: Array) -> Array:
        return 2 * np.pi * manifold.intrinsic(x) @ kvec

    def value(x: Array) -> Array:
        fn = np.cos if trig == "cos" else np.sin
        return np.sqrt(2.0) * fn(phase(x))

    def gradient(x: Array) -> Array:
        ph = phase(x)
        deriv = -np.sin(ph) if trig == "cos" else np.cos(ph)
        coeffs = np.sqrt(2.0) * 2 * np.pi * deriv[:, None] * kvec[None, :]
        return np.einsum("ni,nid->nd", coeffs, manifold.tangent_frame(x))

    return ClosedFormFunction(value, gradient, name=f"{trig}{k}")


def _torus_spectrum(
    manifold: ManifoldSpec, kind: str, count: int
) -> SpectrumTable:
    m = manifold.m
    radius = 1
    while True:
        by_norm: dict[int, list[tuple[int, ...]]] = {}
        for k in itertools.product(range(-radius, radius + 1), repeat=m):
            by_norm.setdefault(sum(c * c for c in k), []).append(k)
        # Only norms <= radius^2 are complete on the |k|_inf <= radius cube
        complete = sorted(s for s in by_norm if s <= radius * radius)
        if sum(len(by_norm[s]) for s in complete) >= count:
            break
        radius += 1

    scale = 1.0 / manifold.volume if kind == "unnormalized" else 1.0
    entries = []
    total = 0
    for s in complete:
        if total >= count:
            break
        if s == 0:
            funcs = [_constant_function()]
        else:
            funcs = []
            # One representative per +-k pair: first nonzero entry positive
            for k in by_norm[s]:
                if next(c for c in k if c != 0) > 0:
                    funcs.append(_torus_mode(manifold, k, "cos"))
                    funcs.append(_torus_mode(manifold, k, "sin"))
        entries.append(
            SpectrumEntry(
                eigenvalue=scale * 4 * np.pi**2 * s,
                multiplicity=len(funcs),
                functions=tuple(funcs),
            )
        )
        total += len(funcs)
    return SpectrumTable(tuple(entries), kind)


def analytic_spectrum(
    manifold: ManifoldSpec,
    density: DensitySpec,
    kind: str,
    count: int,
) -> SpectrumTable:
    """
    Closed-form spectrum of the limit operator for a uniform density.

    The random-walk (and symmetric) limit is ``-Delta_2`` with eigenvalues
    ``l (l + m - 1)`` on ``S^m`` and ``4 pi^2 |k|^2`` on ``T^m``. The
    unnormalized limit is ``-p Delta_2``, the same values divided by
    ``vol(M)``.

    Parameters
    ----------
    manifold : ManifoldSpec
    density : DensitySpec
        Must be uniform.
    kind : str
        ``"unnormalized"``, ``"random-walk"`` or ``"symmetric"`` (or the
        short forms ``un``, ``rw``, ``sym``).
    count : int
        Minimum total multiplicity of the returned table.

    Raises
    ------
    ValueError
        For non-uniform densities; use
        `manifold_spectra.galerkin.continuum_oracle_spectrum` instead.
    """
    if not density.is_uniform:
        raise ValueError(
            "analytic spectra need a uniform density; use "
            "continuum_oracle_spectrum for non-uniform densities"
        )
    Interval(1, None).check(count, "count")
    kind = canonical_kind(kind)
    if manifold.kind == "sphere":
        return _sphere_spectrum(manifold, kind, count)
    return _torus_spectrum(manifold, kind, count)
