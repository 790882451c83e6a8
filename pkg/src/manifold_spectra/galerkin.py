"""
Continuum spectra on the flat torus for non-uniform densities.

The weighted operator ``-(1 / (rho p)) div(p^2 grad f)`` is discretized by
Galerkin's method in the complex Fourier basis ``exp(2 pi i k . theta)``,
``|k|_inf <= K``. Stiffness and mass entries only depend on ``k - l`` and
come from FFTs of ``p^2`` and ``rho p``.
"""

import logging
import warnings
from typing import Literal

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import OracleNotConvergedError
from .eigensolve import eigen_clusters
from .geometry import (
    ClosedFormFunction,
    DensitySpec,
    ManifoldSpec,
    SpectrumEntry,
    SpectrumTable,
)
from .util import Interval

__all__ = [
    "continuum_oracle_spectrum",
    "default_max_cutoff",
    "galerkin_eigenvalues",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
RhoChoice = Literal["one", "density"]

#: Relative eigenvalue change under cutoff doubling that counts as converged
ACCEPT_CHANGE = 1e-3
#: Relative change at the largest cutoff above which the oracle fails
REJECT_CHANGE = 1e-2
#: Extra eigenvalues computed so the last requested cluster is complete
EXTRA_EIGENVALUES = 8
#: Points per chunk when evaluating Fourier eigenfunctions
EVAL_CHUNK = 2048
#: Largest Fourier basis the default cutoff doubling reaches
MAX_BASIS = 5000


def _lattice(m: int, cutoff: int) -> npt.NDArray[np.int64]:
    """All ``k`` with ``|k|_inf <= cutoff``, in lexicographic order."""
    axes = [np.arange(-cutoff, cutoff + 1)] * m
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grid], axis=1)


def _fourier_coefficients(
    manifold: ManifoldSpec, values_at: npt.NDArray[np.float64], size: int
) -> npt.NDArray[np.complex128]:
    """``g_hat(j) = int g exp(-2 pi i j . theta)`` indexed by ``j mod size``."""
    return np.fft.fftn(values_at) / size**manifold.m


def _grid_points(manifold: ManifoldSpec, size: int) -> Array:
    axes = [np.arange(size) / size] * manifold.m
    grid = np.meshgrid(*axes, indexing="ij")
    theta = np.stack([g.reshape(-1) for g in grid], axis=1)
    return manifold.embed(theta)


def _matrices(
    manifold: ManifoldSpec,
    density: DensitySpec,
    rho: RhoChoice,
    cutoff: int,
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.complex128], npt.NDArray[np.complex128]]:
    m = manifold.m
    ks = _lattice(m, cutoff)
    # Differences k - l reach 2 * cutoff, so the FFT grid must exceed 4 * cutoff
    size = 4 * cutoff + 4
    pts = _grid_points(manifold, size)
    p = density(pts).reshape((size,) * m)
    weight = p if rho == "one" else p**2
    p2_hat = _fourier_coefficients(manifold, p**2, size).reshape(-1)
    w_hat = _fourier_coefficients(manifold, weight, size).reshape(-1)

    flat = np.zeros((ks.shape[0], ks.shape[0]), dtype=np.int64)
    for d in range(m):
        delta = (ks[:, d][:, np.newaxis] - ks[:, d][np.newaxis, :]) % size
        flat = flat * size + delta
    stiffness = (2 * np.pi) ** 2 * (ks @ ks.T) * p2_hat[flat]
    mass = w_hat[flat]
    return ks, stiffness, mass


def galerkin_eigenvalues(
    manifold: ManifoldSpec,
    density: DensitySpec,
    rho: RhoChoice,
    cutoff: int,
    count: int,
) -> tuple[Array, npt.NDArray[np.complex128], npt.NDArray[np.int64], npt.NDArray[np.complex128]]:
    """
    Smallest ``count`` Galerkin eigenpairs at one cutoff.

    Returns
    -------
    values : numpy.ndarray
        Ascending eigenvalues.
    vectors : numpy.ndarray
        Complex Fourier coefficients, one column per eigenvalue.
    ks : numpy.ndarray
        Lattice vectors of the basis.
    mass : numpy.ndarray
        Galerkin mass matrix.
    """
    ks, stiffness, mass = _matrices(manifold, density, rho, cutoff)
    size = ks.shape[0]
    count = min(count, size)
    off = stiffness - np.diag(np.diag(stiffness))
    off_mass = mass - np.diag(np.diag(mass))
    tiny = 1e-14 * max(float(np.abs(stiffness).max()), 1.0)
    if np.abs(off).max() <= tiny and np.abs(off_mass).max() <= 1e-14:
        # Constant density: the Fourier basis diagonalizes the operator
        ratio = np.real(np.diag(stiffness)) / np.real(np.diag(mass))
        order = np.argsort(ratio, kind="stable")[:count]
        vectors = np.zeros((size, count), dtype=np.complex128)
        vectors[order, np.arange(count)] = 1.0 / np.sqrt(np.real(np.diag(mass))[order])
        return ratio[order], vectors, ks, mass
    values, vectors = scipy.linalg.eigh(
        stiffness, mass, subset_by_index=[0, count - 1]
    )
    return values, vectors, ks, mass


class _FourierFunction:
    """Real function ``Re sum_k a_k exp(2 pi i k . theta)``."""

    def __init__(
        self,
        manifold: ManifoldSpec,
        ks: npt.NDArray[np.int64],
        coefficients: npt.NDArray[np.complex128],
    ):
        keep = np.abs(coefficients) > 1e-14 * np.abs(coefficients).max()
        self.manifold = manifold
        self.ks = ks[keep].astype(np.float64)
        self.coefficients = coefficients[keep]

    def _terms(self, points: Array) -> npt.NDArray[np.complex128]:
        theta = self.manifold.intrinsic(points)
        return np.exp(2j * np.pi * (theta @ self.ks.T))

    def value(self, points: Array) -> Array:
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], EVAL_CHUNK):
            chunk = points[start : start + EVAL_CHUNK]
            out[start : start + EVAL_CHUNK] = np.real(
                self._terms(chunk) @ self.coefficients
            )
        return out

    def gradient(self, points: Array) -> Array:
        out = np.empty_like(points)
        scaled = 2j * np.pi * self.coefficients[:, np.newaxis] * self.ks
        for start in range(0, points.shape[0], EVAL_CHUNK):
            chunk = points[start : start + EVAL_CHUNK]
            d_theta = np.real(self._terms(chunk) @ scaled)
            frame = self.manifold.tangent_frame(chunk)
            out[start : start + EVAL_CHUNK] = np.einsum(
                "ni,nid->nd", d_theta, frame
            )
        return out


def _real_eigenspace(
    vectors: npt.NDArray[np.complex128],
    ks: npt.NDArray[np.int64],
    mass: npt.NDArray[np.complex128],
) -> npt.NDArray[np.complex128]:
    """
    Coefficients of a real, mass-orthonormal basis of a complex eigenspace.
    """
    dim = vectors.shape[1]
    size = ks.shape[0]
    # The lattice is symmetric and ordered, so -k sits at the mirrored index
    neg = size - 1 - np.arange(size)
    mirrored = np.conj(vectors[neg])
    real_parts = np.column_stack([(vectors + mirrored) / 2, (vectors - mirrored) / 2j])
    stacked = np.vstack([real_parts.real, real_parts.imag])
    u, _, _ = np.linalg.svd(stacked, full_matrices=False)
    basis = u[:size, :dim] + 1j * u[size:, :dim]
    gram = np.real(basis.conj().T @ mass @ basis)
    evals, evecs = np.linalg.eigh((gram + gram.T) / 2)
    return basis @ (evecs / np.sqrt(evals))


def default_max_cutoff(m: int, cutoff: int) -> int:
    """
    Largest ``cutoff * 2^j`` whose basis ``(2 K + 1)^m`` fits in `MAX_BASIS`.

    Never smaller than ``cutoff``.
    """
    top = cutoff
    while (4 * top + 1) ** m <= MAX_BASIS:
        top *= 2
    return top


def continuum_oracle_spectrum(
    manifold: ManifoldSpec,
    density: DensitySpec,
    rho: RhoChoice = "one",
    k: int = 10,
    cutoff: int | None = None,
    max_cutoff: int | None = None,
) -> SpectrumTable:
    """
    Smallest eigenvalues of the weighted Laplacian on the flat torus.

    The Galerkin problem is solved at cutoff ``K`` and ``2 K``; the result
    is accepted when the first ``k`` eigenvalues change by at most
    `ACCEPT_CHANGE` relative, otherwise the cutoff keeps doubling up to
    ``max_cutoff``. The default cap is the largest doubling whose basis
    ``(2 K + 1)^m`` stays within `MAX_BASIS`, since every step is a dense
    generalized eigenproblem of that size.

    Parameters
    ----------
    manifold : ManifoldSpec
        A flat torus.
    density : DensitySpec
        Sampling density ``p``.
    rho : {"one", "density"}
        Weight ``rho``: ``"one"`` gives the unnormalized limit, ``"density"``
        (``rho = p``) the random-walk limit.
    k : int
        Minimum total multiplicity of the returned table.
    cutoff : int, optional
        Initial cutoff; 16 on ``T^2``, 4 in higher dimension.
    max_cutoff : int, optional
        Largest cutoff tried; see `default_max_cutoff`.

    Raises
    ------
    OracleNotConvergedError
        If the eigenvalues still move by more than `REJECT_CHANGE` at the
        largest cutoff.

    Warns
    -----
    RuntimeWarning
        If the final change lies between `ACCEPT_CHANGE` and `REJECT_CHANGE`.
    """
    if manifold.kind != "torus":
        raise ValueError("the Galerkin oracle is implemented on T^m only")
    if rho not in ("one", "density"):
        raise ValueError(f"rho must be 'one' or 'density', got {rho!r}")
    k = Interval(1, None).check(k, "k")
    if cutoff is None:
        cutoff = 16 if manifold.m == 2 else 4
    Interval(1, None).check(cutoff, "cutoff")
    if max_cutoff is None:
        max_cutoff = default_max_cutoff(manifold.m, cutoff)
    Interval(cutoff, None).check(max_cutoff, "max_cutoff")

    count = k + EXTRA_EIGENVALUES
    coarse = galerkin_eigenvalues(manifold, density, rho, cutoff, count)
    current = cutoff
    while True:
        finer_cutoff = min(2 * current, max_cutoff)
        if finer_cutoff == current:
            # Nothing left to compare against
            fine = coarse
            change = 0.0
            break
        fine = galerkin_eigenvalues(manifold, density, rho, finer_cutoff, count)
        n_cmp = min(k, coarse[0].size, fine[0].size)
        change = float(
            np.max(
                np.abs(coarse[0][:n_cmp] - fine[0][:n_cmp])
                / np.maximum(np.abs(fine[0][:n_cmp]), 1.0)
            )
        )
        logger.info(
            "Galerkin cutoff %d -> %d: relative change %.3g",
            current,
            finer_cutoff,
            change,
        )
        current = finer_cutoff
        if change <= ACCEPT_CHANGE or current >= max_cutoff:
            break
        coarse = fine

    if change > REJECT_CHANGE:
        raise OracleNotConvergedError(
            f"Galerkin eigenvalues changed by {change:.3g} at cutoff {current}"
        )
    if change > ACCEPT_CHANGE:
        warnings.warn(
            f"Galerkin eigenvalues changed by {change:.3g} at cutoff {current}",
            RuntimeWarning,
            stacklevel=2,
        )

    values, vectors, ks, mass = fine
    scale = max(float(np.abs(values).max()), 1.0)
    entries = []
    for start, stop in eigen_clusters(values):
        if start >= k:
            break
        lam = float(np.mean(values[start:stop]))
        if abs(lam) <= 1e-10 * scale:
            lam = 0.0
        coefficients = _real_eigenspace(vectors[:, start:stop], ks, mass)
        functions = []
        for j in range(coefficients.shape[1]):
            fourier = _FourierFunction(manifold, ks, coefficients[:, j])
            functions.append(
                ClosedFormFunction(fourier.value, fourier.gradient, name=f"galerkin{start + j}")
            )
        entries.append(
            SpectrumEntry(
                eigenvalue=lam,
                multiplicity=stop - start,
                functions=tuple(functions),
            )
        )
    kind = "unnormalized" if rho == "one" else "random-walk"
    return SpectrumTable(tuple(entries), kind)
