"""
File formats for point clouds, graphs, eigenpairs, plans and fields.

Point clouds
    ``MSPC`` binary: little-endian header (magic, version u32, n u64,
    d u32, m u32, manifold tag u32, seed u64) followed by row-major
    float64 coordinates; or one point per CSV line.
Sparse matrices
    ``MSCR`` binary CSR dump (magic, version u32, n u64, nnz u64, int64
    ``indptr`` and ``indices``, float64 ``data``), or sorted ``i j w``
    text triplets.
Eigenpairs
    JSON summary plus ``.npy`` files for the eigenvectors and the mass.
Transport plans and alignment reports
    JSON.
Fields
    ``.npz`` with values and weights, paired with a JSON sidecar holding
    the content hash of the quadrature cloud.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse

from .continuum import AlignmentReport, ContinuumField
from .eigensolve import EigenResult, eigen_clusters
from .geometry import DensitySpec, ManifoldSpec, PointCloud, uniform_density
from .transport import TransportPlan

__all__ = [
    "write_point_cloud",
    "read_point_cloud",
    "write_points_csv",
    "read_points_csv",
    "write_csr",
    "read_csr",
    "write_triplets",
    "read_triplets",
    "write_eigen_result",
    "read_eigen_result",
    "write_plan",
    "read_plan",
    "write_alignment",
    "write_field",
    "read_field",
]

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_CLOUD_MAGIC = b"MSPC"
_CLOUD_HEADER = struct.Struct("<4sIQIIIQ")
_CSR_MAGIC = b"MSCR"
_CSR_HEADER = struct.Struct("<4sIQQ")
_TAG_KINDS = {1: "sphere", 2: "torus"}

PathLike = str | Path


def write_point_cloud(cloud: PointCloud, path: PathLike) -> Path:
    """Write a point cloud in the ``MSPC`` binary format."""
    path = Path(path)
    header = _CLOUD_HEADER.pack(
        _CLOUD_MAGIC,
        FORMAT_VERSION,
        cloud.n,
        cloud.d,
        cloud.manifold.m,
        cloud.manifold.tag,
        cloud.seed,
    )
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
    return path


def read_point_cloud(
    path: PathLike, density: DensitySpec | None = None
) -> PointCloud:
    """
    Read an ``MSPC`` file.

    The format does not store the density; ``density`` defaults to the
    uniform one.

    Raises
    ------
    ValueError
        On a bad magic number, version, tag or truncated payload.
    DomainError
        If the stored points are off the manifold.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _CLOUD_HEADER.size:
        raise ValueError(f"{path} is too short for a point-cloud header")
    magic, version, n, d, m, tag, seed = _CLOUD_HEADER.unpack_from(raw)
    if magic != _CLOUD_MAGIC:
        raise ValueError(f"{path} is not a point-cloud file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported point-cloud version {version}")
    if tag not in _TAG_KINDS:
        raise ValueError(f"unknown manifold tag {tag}")
    manifold = ManifoldSpec(_TAG_KINDS[tag], m)  # type: ignore[arg-type]
    if d != manifold.d:
        raise ValueError(f"{manifold.name} has ambient dimension {manifold.d}, file says {d}")
    payload = raw[_CLOUD_HEADER.size :]
    if len(payload) != 8 * n * d:
        raise ValueError(f"{path} holds {len(payload)} bytes of points, expected {8 * n * d}")
    points = np.frombuffer(payload, dtype="<f8").reshape(n, d).astype(np.float64)
    return PointCloud(
        points,
        manifold,
        uniform_density(manifold) if density is None else density,
        int(seed),
    )


def write_points_csv(cloud: PointCloud, path: PathLike) -> Path:
    """One point per line, comma separated, full precision."""
    path = Path(path)
    np.savetxt(path, cloud.points, delimiter=",", fmt="%.17g")
    return path


def read_points_csv(
    path: PathLike,
    manifold: ManifoldSpec,
    density: DensitySpec | None = None,
    seed: int = 0,
) -> PointCloud:
    """Read a CSV export back into a point cloud on ``manifold``."""
    points = np.loadtxt(path, delimiter=",", ndmin=2)
    return PointCloud(
        points,
        manifold,
        uniform_density(manifold) if density is None else density,
        seed,
    )


def write_csr(matrix: Any, path: PathLike) -> Path:
    """Write a square sparse matrix in the ``MSCR`` binary format."""
    path = Path(path)
    csr = sparse.csr_array(matrix)
    csr.sort_indices()
    n = csr.shape[0]
    if csr.shape != (n, n):
        raise ValueError(f"matrix must be square, got shape {csr.shape}")
    with path.open("wb") as fh:
        fh.write(_CSR_HEADER.pack(_CSR_MAGIC, FORMAT_VERSION, n, csr.nnz))
        fh.write(csr.indptr.astype("<i8").tobytes())
        fh.write(csr.indices.astype("<i8").tobytes())
        fh.write(csr.data.astype("<f8").tobytes())
    return path


def read_csr(path: PathLike) -> sparse.csr_array:
    """
    Read an ``MSCR`` file.

    Raises
    ------
    ValueError
        On a bad magic number, version or truncated payload.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _CSR_HEADER.size:
        raise ValueError(f"{path} is too short for a CSR header")
    magic, version, n, nnz = _CSR_HEADER.unpack_from(raw)
    if magic != _CSR_MAGIC:
        raise ValueError(f"{path} is not a CSR file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported CSR version {version}")
    expected = _CSR_HEADER.size + 8 * (n + 1) + 16 * nnz
    if len(raw) != expected:
        raise ValueError(f"{path} has {len(raw)} bytes, expected {expected}")
    offset = _CSR_HEADER.size
    indptr = np.frombuffer(raw, dtype="<i8", count=n + 1, offset=offset)
    offset += 8 * (n + 1)
    indices = np.frombuffer(raw, dtype="<i8", count=nnz, offset=offset)
    offset += 8 * nnz
    data = np.frombuffer(raw, dtype="<f8", count=nnz, offset=offset)
    return sparse.csr_array(
        (data.astype(np.float64), indices.astype(np.int64), indptr.astype(np.int64)),
        shape=(n, n),
    )


def write_triplets(matrix: Any, path: PathLike) -> Path:
    """Write ``i j w`` lines, 0-based, sorted by row then column."""
    path = Path(path)
    coo = sparse.coo_array(matrix)
    order = np.lexsort((coo.col, coo.row))
    with path.open("w") as fh:
        for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {float(w)!r}\n")
    return path


def read_triplets(path: PathLike, n: int) -> sparse.csr_array:
    """Read ``i j w`` lines into an ``n x n`` CSR matrix."""
    if not Path(path).read_text().strip():
        return sparse.csr_array((n, n))
    table = np.loadtxt(path, ndmin=2)
    rows = table[:, 0].astype(np.int64)
    cols = table[:, 1].astype(np.int64)
    return sparse.csr_array((table[:, 2], (rows, cols)), shape=(n, n))


def write_eigen_result(result: EigenResult, path: PathLike) -> Path:
    """
    Write an eigen-result JSON summary.

    Eigenvectors and mass go to ``<stem>.vectors.npy`` and
    ``<stem>.mass.npy`` next to the JSON file.
    """
    path = Path(path)
    vectors_file = path.with_name(f"{path.stem}.vectors.npy")
    mass_file = path.with_name(f"{path.stem}.mass.npy")
    np.save(vectors_file, result.eigenvectors)
    np.save(mass_file, result.mass)
    summary = {
        "eigenvalues": result.eigenvalues.tolist(),
        "residuals": result.residuals.tolist(),
        "iterations": result.iterations,
        "inner_product": result.inner_product,
        "converged": result.converged,
        "n_converged": result.n_converged,
        "zero_multiplicity": result.zero_multiplicity,
        "vectors_file": vectors_file.name,
        "mass_file": mass_file.name,
    }
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return path


def read_eigen_result(path: PathLike) -> EigenResult:
    """Read a summary written by `write_eigen_result`."""
    path = Path(path)
    summary = json.loads(path.read_text())
    values = np.asarray(summary["eigenvalues"], dtype=np.float64)
    return EigenResult(
        eigenvalues=values,
        eigenvectors=np.load(path.with_name(summary["vectors_file"])),
        mass=np.load(path.with_name(summary["mass_file"])),
        inner_product=summary["inner_product"],
        residuals=np.asarray(summary["residuals"], dtype=np.float64),
        iterations=int(summary["iterations"]),
        converged=bool(summary["converged"]),
        n_converged=int(summary["n_converged"]),
        zero_multiplicity=int(summary["zero_multiplicity"]),
        clusters=eigen_clusters(values),
    )


def write_plan(plan: TransportPlan, path: PathLike) -> Path:
    """Write ``{"eps_hat", "capacity", "metric", "cells"}`` as JSON."""
    path = Path(path)
    data = {
        "eps_hat": plan.eps_hat,
        "capacity": plan.capacity,
        "metric": plan.metric,
        "cells": [cell.tolist() for cell in plan.cells],
    }
    path.write_text(json.dumps(data, sort_keys=True) + "\n")
    return path


def read_plan(path: PathLike) -> TransportPlan:
    """
    Read a plan written by `write_plan`.

    Raises
    ------
    ValueError
        If the cells miss a quadrature point.
    RuntimeError
        If the cells are not balanced.
    """
    data = json.loads(Path(path).read_text())
    cells = data["cells"]
    N = sum(len(cell) for cell in cells)
    assignment = np.full(N, -1, dtype=np.int64)
    for i, cell in enumerate(cells):
        assignment[np.asarray(cell, dtype=np.int64)] = i
    if np.any(assignment < 0):
        raise ValueError(f"{path}: cells do not cover every quadrature point")
    return TransportPlan(
        assignment=assignment,
        capacity=int(data["capacity"]),
        eps_hat=float(data["eps_hat"]),
        metric=data.get("metric", "geodesic"),
        n=len(cells),
    )


def write_alignment(report: AlignmentReport, path: PathLike) -> Path:
    """Write an alignment report as JSON."""
    path = Path(path)
    data = {
        "index": report.index,
        "lambda_continuum": report.lambda_continuum,
        "multiplicity": report.multiplicity,
        "subspace_error": report.subspace_error,
        "gap": report.gap,
        "coefficients": np.asarray(report.coefficients).tolist(),
        "grad_sup": report.grad_sup,
        "lambda_discrete": report.lambda_discrete,
    }
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return path


def write_field(field: ContinuumField, path: PathLike) -> Path:
    """
    Write field values and weights to ``.npz`` with a ``.json`` sidecar.

    The sidecar records the content hash of the quadrature cloud; `read_field`
    refuses to pair the values with any other cloud.
    """
    path = Path(path).with_suffix(".npz")
    np.savez(path, values=field.values, rho=np.asarray(field.rho))
    sidecar = {
        "quadrature_hash": field.cloud.content_hash(),
        "n": field.cloud.n,
        "manifold": field.cloud.manifold.name,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")
    return path


def read_field(path: PathLike, quadrature: PointCloud) -> ContinuumField:
    """
    Read a field and attach it to ``quadrature``.

    Raises
    ------
    ValueError
        If the stored hash does not match ``quadrature``.
    """
    path = Path(path).with_suffix(".npz")
    sidecar = json.loads(path.with_suffix(".json").read_text())
    if sidecar["quadrature_hash"] != quadrature.content_hash():
        raise ValueError(
            f"{path} was written for a different quadrature cloud"
        )
    with np.load(path) as data:
        return ContinuumField(data["values"], quadrature, data["rho"])
