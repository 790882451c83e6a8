"""
End-to-end convergence studies.

A study runs one row per ``(n, seed)``: sample the data, choose the
bandwidth, build and solve the graph Laplacian, compare with the continuum
spectrum and, optionally, estimate the transport distance and the
eigenfunction alignment. Rows run on a thread pool and are merged in
configuration order.
"""

import configparser
import logging
import math
import os
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from scipy import stats

from .continuum import (
    align_eigenspace,
    interpolate_I,
    kde_report,
    voronoi_extend,
    weight_density,
)
from .eigensolve import EigenResult, lobpcg_quiet, smallest_k
from .errors import (
    ConfigError,
    ConnectivityError,
    OracleNotConvergedError,
    QuadratureTooCoarseError,
    RegimeError,
)
from .galerkin import continuum_oracle_spectrum
from .geometry import (
    DensitySpec,
    ManifoldSpec,
    PointCloud,
    SpectrumTable,
    analytic_spectrum,
    make_density,
    quadrature_cloud,
    sample,
)
from .graph import build_graph
from .kernels import PROFILES, make_kernel, unit_ball_volume
from .laplacian import assemble
from .transport import (
    MIN_CAPACITY,
    TransportPlan,
    estimate_eps,
    voronoi_partition,
)
from .util import Interval, canonical_kind

__all__ = [
    "StudyConfig",
    "RowResult",
    "ClusterError",
    "ConvergenceReport",
    "bandwidth_schedule",
    "assumption_margin",
    "run_study",
    "fit_rate",
]

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
HRule = Literal["schedule", "fixed", "sqrt-eps"]

#: Environment variable overriding the default number of row workers
WORKERS_ENV = "MANIFOLD_SPECTRA_WORKERS"
#: Default memory ceiling of a study, in bytes
MEMORY_LIMIT = 4 * 2**30
#: Estimated bytes held per graph edge during assembly and solve
BYTES_PER_EDGE = 96
#: Default wall-time budget of one row, in seconds
ROW_BUDGET = 120.0

H_RULES = ("schedule", "fixed", "sqrt-eps")
OUTPUT_FORMATS = ("json", "csv", "svg")

# Flags that keep a row out of the rate fit
_UNFIT_FLAGS = frozenset(
    {"out-of-regime", "not-converged", "timeout", "isolated-vertices"}
)


def _default_workers() -> int:
    try:
        return max(int(os.environ[WORKERS_ENV]), 1)
    except (KeyError, ValueError):
        return 1


def bandwidth_schedule(n: int, m: int, scale: float = 1.0) -> float:
    """
    Bandwidth ``h = scale * sqrt(log(n)^{p_m} / n^{1/m})``.

    ``p_m = 3/4`` on surfaces and ``1/m`` in higher dimension.
    """
    Interval(2, None).check(n, "n")
    Interval(2, None).check(m, "m")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    p_m = 0.75 if m == 2 else 1.0 / m
    return float(scale * math.sqrt(math.log(n) ** p_m / n ** (1.0 / m)))


def assumption_margin(h: float, eps: float, m: int) -> float:
    """``h - (m + 5) eps``; positive inside the convergence regime."""
    return float(h - (m + 5) * eps)


@dataclass(frozen=True)
class StudyConfig:
    """
    Parameters of a convergence study.

    Build one from an INI file with `StudyConfig.from_file`; see
    ``docs/user_guide.rst`` for the format.
    """

    manifold: ManifoldSpec
    density: DensitySpec
    n_grid: tuple[int, ...]
    seeds: tuple[int, ...]
    k: int = 5
    kernel: str = "indicator"
    kind: str = "unnormalized"
    h_rule: HRule = "schedule"
    h_scale: float = 1.0
    h_fixed: float | None = None
    self_loops: bool = True
    solver_tol: float = 1e-8
    max_iter: int = 500
    transport: bool = True
    metric: Literal["geodesic", "euclidean"] = "geodesic"
    quadrature_multiplier: int = 20
    workers: int = field(default_factory=_default_workers)
    row_budget: float = ROW_BUDGET
    memory_limit: float = MEMORY_LIMIT
    output_dir: str | None = None
    formats: tuple[str, ...] = OUTPUT_FORMATS
    timings: bool = False

    def __post_init__(self) -> None:
        if not self.n_grid:
            raise ConfigError("n grid must not be empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError(
                f"n grid must be strictly increasing, got {list(self.n_grid)}"
            )
        if self.n_grid[0] < 2:
            raise ConfigError("every n must be at least 2")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if self.k + 2 > self.n_grid[0]:
            raise ConfigError(
                f"k + 2 = {self.k + 2} eigenpairs exceed n = {self.n_grid[0]}"
            )
        if self.kernel not in PROFILES:
            raise ConfigError(
                f"unknown kernel {self.kernel!r}; expected one of {PROFILES}"
            )
        try:
            object.__setattr__(self, "kind", canonical_kind(self.kind))
        except ValueError as err:
            raise ConfigError(str(err)) from None
        if self.h_rule not in H_RULES:
            raise ConfigError(
                f"unknown h_rule {self.h_rule!r}; expected one of {H_RULES}"
            )
        if self.h_rule == "fixed" and (
            self.h_fixed is None or not self.h_fixed > 0
        ):
            raise ConfigError("h_rule 'fixed' needs a positive h_fixed")
        if self.h_rule == "sqrt-eps" and not self.transport:
            raise ConfigError("h_rule 'sqrt-eps' needs transport enabled")
        if not self.h_scale > 0:
            raise ConfigError(f"h_scale must be positive, got {self.h_scale}")
        if self.transport and self.quadrature_multiplier < MIN_CAPACITY:
            raise ConfigError(
                f"quadrature_multiplier must be at least {MIN_CAPACITY}, "
                f"got {self.quadrature_multiplier}"
            )
        if self.metric not in ("geodesic", "euclidean"):
            raise ConfigError(
                f"metric must be 'geodesic' or 'euclidean', got {self.metric!r}"
            )
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not self.row_budget > 0:
            raise ConfigError("row_budget must be positive")
        unknown = set(self.formats) - set(OUTPUT_FORMATS)
        if unknown:
            raise ConfigError(f"unknown output formats {sorted(unknown)}")

    @property
    def m(self) -> int:
        """Intrinsic dimension."""
        return self.manifold.m

    def bandwidth(self, n: int, eps_hat: float | None = None) -> float:
        """Bandwidth of the row with ``n`` points."""
        if self.h_rule == "fixed":
            assert self.h_fixed is not None
            return float(self.h_fixed)
        if self.h_rule == "sqrt-eps":
            if eps_hat is None:
                raise ValueError("h_rule 'sqrt-eps' needs eps_hat")
            return float(self.h_scale * math.sqrt(eps_hat))
        return bandwidth_schedule(n, self.m, self.h_scale)

    def estimated_bytes(self) -> float:
        """Memory estimate at the largest ``n``: ``n^2 omega_m h^m alpha``."""
        n = self.n_grid[-1]
        if self.h_rule == "fixed":
            h = self.bandwidth(n)
        else:
            h = bandwidth_schedule(n, self.m, self.h_scale)
        edges = n**2 * unit_ball_volume(self.m) * h**self.m * self.density.alpha
        return float(edges * BYTES_PER_EDGE)

    def to_dict(self) -> dict[str, Any]:
        """Plain representation stored in reports."""
        return {
            "manifold": {"kind": self.manifold.kind, "m": self.manifold.m},
            "density": {
                "name": self.density.name,
                "amplitude": self.density.amplitude,
            },
            "n": list(self.n_grid),
            "seeds": list(self.seeds),
            "k": self.k,
            "kernel": self.kernel,
            "kind": self.kind,
            "h_rule": self.h_rule,
            "h_scale": self.h_scale,
            "h_fixed": self.h_fixed,
            "self_loops": self.self_loops,
            "solver_tol": self.solver_tol,
            "max_iter": self.max_iter,
            "transport": self.transport,
            "metric": self.metric,
            "quadrature_multiplier": self.quadrature_multiplier,
        }

    @classmethod
    def from_string(cls, text: str) -> "StudyConfig":
        """Parse an INI document."""
        parser = configparser.ConfigParser(
            inline_comment_prefixes=("#", ";"), interpolation=None
        )
        try:
            parser.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"cannot parse study configuration: {err}") from err
        return _config_from_parser(parser)

    @classmethod
    def from_file(cls, path: str | os.PathLike[str]) -> "StudyConfig":
        """Read an INI file."""
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read {path}: {err}") from err
        return cls.from_string(text)


_KNOWN_KEYS = {
    "study": {"n", "seeds", "k", "workers", "row_budget", "memory_limit"},
    "manifold": {"kind", "m"},
    "density": {"name", "amplitude"},
    "kernel": {"profile"},
    "graph": {"kind", "h_rule", "h_scale", "h_fixed", "self_loops"},
    "solver": {"tol", "max_iter"},
    "transport": {"enabled", "metric", "quadrature_multiplier"},
    "output": {"directory", "formats", "timings"},
}


def _get(
    parser: configparser.ConfigParser,
    section: str,
    key: str,
    convert: Callable[[str], Any],
    default: Any,
) -> Any:
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return convert(raw)
    except ValueError as err:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {err}") from None


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(item) for item in raw.replace(",", " ").split())


def _str_list(raw: str) -> tuple[str, ...]:
    return tuple(item for item in raw.replace(",", " ").split())


def _boolean(raw: str) -> bool:
    value = configparser.ConfigParser.BOOLEAN_STATES.get(raw.lower())
    if value is None:
        raise ValueError("not a boolean")
    return value


def _config_from_parser(parser: configparser.ConfigParser) -> StudyConfig:
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser.options(section)) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )

    manifold_kind = _get(parser, "manifold", "kind", str, "torus")
    m = _get(parser, "manifold", "m", int, 2)
    try:
        manifold = ManifoldSpec(manifold_kind, m)
        density = make_density(
            manifold,
            _get(parser, "density", "name", str, "uniform"),
            _get(parser, "density", "amplitude", float, 0.5),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None

    if not parser.has_option("study", "n"):
        raise ConfigError("[study] n is required")
    return StudyConfig(
        manifold=manifold,
        density=density,
        n_grid=_get(parser, "study", "n", _int_list, ()),
        seeds=_get(parser, "study", "seeds", _int_list, (0,)),
        k=_get(parser, "study", "k", int, 5),
        kernel=_get(parser, "kernel", "profile", str, "indicator"),
        kind=_get(parser, "graph", "kind", str, "unnormalized"),
        h_rule=_get(parser, "graph", "h_rule", str, "schedule"),
        h_scale=_get(parser, "graph", "h_scale", float, 1.0),
        h_fixed=_get(parser, "graph", "h_fixed", float, None),
        self_loops=_get(parser, "graph", "self_loops", _boolean, True),
        solver_tol=_get(parser, "solver", "tol", float, 1e-8),
        max_iter=_get(parser, "solver", "max_iter", int, 500),
        transport=_get(parser, "transport", "enabled", _boolean, True),
        metric=_get(parser, "transport", "metric", str, "geodesic"),
        quadrature_multiplier=_get(
            parser, "transport", "quadrature_multiplier", int, 20
        ),
        workers=_get(parser, "study", "workers", int, _default_workers()),
        row_budget=_get(parser, "study", "row_budget", float, ROW_BUDGET),
        memory_limit=_get(parser, "study", "memory_limit", float, MEMORY_LIMIT),
        output_dir=_get(parser, "output", "directory", str, None),
        formats=_get(parser, "output", "formats", _str_list, OUTPUT_FORMATS),
        timings=_get(parser, "output", "timings", _boolean, False),
    )


@dataclass(frozen=True)
class ClusterError:
    """
    Discrete vs continuum eigenvalues of one continuum eigenspace.

    ``relative_error`` and both alignment errors are None when they are
    undefined (zero eigenvalue) or were not computed.
    """

    index: int
    start: int
    stop: int
    lambda_continuum: float
    lambda_graph: float
    relative_error: float | None
    alignment_interpolated: float | None = None
    alignment_voronoi: float | None = None


@dataclass
class RowResult:
    """Everything measured for one ``(n, seed)``."""

    n: int
    seed: int
    h: float | None = None
    eps_hat: float | None = None
    margin: float | None = None
    eigenvalues: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    continuum: list[float] = field(default_factory=list)
    clusters: list[ClusterError] = field(default_factory=list)
    kde_max_error: float | None = None
    weight_discrepancy: float | None = None
    n_edges: int = 0
    flags: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def usable(self) -> bool:
        """Whether the row enters the rate fit."""
        return not _UNFIT_FLAGS.intersection(self.flags)

    def cluster(self, index: int) -> ClusterError | None:
        """Cluster error of spectrum entry ``index``, if measured."""
        for c in self.clusters:
            if c.index == index:
                return c
        return None

    def relative_errors(self, k: int) -> list[float | None]:
        """Per-index ``|lambda_i(graph) - lambda_i(M)| / lambda_i(M)``."""
        out: list[float | None] = []
        for i in range(k):
            if i >= len(self.eigenvalues) or i >= len(self.continuum):
                out.append(None)
                continue
            lam = self.continuum[i]
            out.append(
                None if lam == 0 else abs(self.eigenvalues[i] - lam) / lam
            )
        return out


@dataclass
class ConvergenceReport:
    """
    Result of `run_study`.

    Attributes
    ----------
    config : dict
        `StudyConfig.to_dict` of the study.
    rows : list of RowResult
        One row per ``(n, seed)`` in configuration order.
    rate_index : int or None
        Spectrum entry whose cluster error is fitted, the first nonzero one.
    medians : list of tuple
        ``(n, median cluster error)`` over the usable rows.
    slope, stderr : float or None
        Log-log slope of the medians against ``n``; None with fewer than
        two usable grid values.
    timings : bool
        Whether wall times are serialized.
    """

    config: dict[str, Any]
    rows: list[RowResult] = field(default_factory=list)
    rate_index: int | None = None
    medians: list[tuple[int, float]] = field(default_factory=list)
    slope: float | None = None
    stderr: float | None = None
    timings: bool = False

    @property
    def k(self) -> int:
        """Tracked eigenpairs per row."""
        return int(self.config.get("k", 0))


def fit_rate(points: list[tuple[float, float]]) -> tuple[float, float]:
    """
    Least-squares slope of ``log(error)`` against ``log(n)``.

    Returns
    -------
    slope, stderr : float

    Raises
    ------
    ValueError
        With fewer than two points or nonpositive values.
    """
    if len(points) < 2:
        raise ValueError(f"need at least 2 points to fit a rate, got {len(points)}")
    arr = np.asarray(points, dtype=np.float64)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("rate fit needs positive finite n and errors")
    if np.ptp(arr[:, 0]) == 0:
        raise ValueError("rate fit needs at least two distinct n")
    fit = stats.linregress(np.log(arr[:, 0]), np.log(arr[:, 1]))
    return float(fit.slope), float(fit.stderr)


class _RowTimeout(Exception):
    pass


class _RowRunner:
    """Runs single rows of a study against a shared continuum table."""

    def __init__(self, config: StudyConfig, table: SpectrumTable | None):
        self.config = config
        self.table = table
        self.kernel = make_kernel(config.kernel, config.m)

    def _tick(self, row: RowResult, stage: str, start: float, last: float) -> float:
        now = time.perf_counter()
        row.timings[stage] = now - last
        if now - start > self.config.row_budget:
            raise _RowTimeout(stage)
        return now

    def __call__(self, n: int, seed: int) -> RowResult:
        row = RowResult(n=n, seed=seed)
        start = last = time.perf_counter()
        try:
            self._run(row, start, last)
        except _RowTimeout as stage:
            logger.warning(
                "row n=%d seed=%d exceeded %.0f s after %s",
                n,
                seed,
                self.config.row_budget,
                stage,
            )
            row.flags.append("timeout")
        except ConnectivityError as err:
            logger.warning("row n=%d seed=%d: %s", n, seed, err)
            row.flags.append("isolated-vertices")
        row.timings["total"] = time.perf_counter() - start
        return row

    def _run(self, row: RowResult, start: float, last: float) -> None:
        config = self.config
        n, seed = row.n, row.seed
        cloud = sample(config.manifold, config.density, n, seed)
        last = self._tick(row, "sample", start, last)

        plan: TransportPlan | None = None
        quadrature: PointCloud | None = None
        if config.transport:
            quadrature = quadrature_cloud(
                config.manifold,
                config.density,
                config.quadrature_multiplier * n,
                seed,
            )
            plan = estimate_eps(cloud, quadrature, config.metric)
            row.eps_hat = plan.eps_hat
            last = self._tick(row, "transport", start, last)

        h = config.bandwidth(n, row.eps_hat)
        row.h = h
        if row.eps_hat is not None:
            row.margin = assumption_margin(h, row.eps_hat, config.m)
            if row.margin <= 0:
                row.flags.append("out-of-regime")

        # Rows run on worker threads: soft failures come back in the
        # results and never go through the warnings machinery
        graph = build_graph(cloud, h, self.kernel, config.self_loops, warn=False)
        op = assemble(graph, config.kind)
        eig = smallest_k(
            op,
            min(config.k + 2, n),
            tol=config.solver_tol,
            max_iter=config.max_iter,
            seed=seed,
            warn=False,
        )
        row.n_edges = int((graph.nnz - (n if config.self_loops else 0)) // 2)
        if graph.metadata.get("empty"):
            logger.warning("row n=%d seed=%d: graph with h=%.4g has no edges", n, seed, h)
            row.flags.append("empty-graph")
        row.eigenvalues = eig.eigenvalues.tolist()
        row.residuals = eig.residuals.tolist()
        if not eig.converged:
            logger.warning(
                "row n=%d seed=%d: only %d of %d eigenpairs converged",
                n,
                seed,
                eig.n_converged,
                eig.k,
            )
            row.flags.append("not-converged")
        if eig.zero_multiplicity > 1:
            row.flags.append("disconnected")
        last = self._tick(row, "eigensolve", start, last)

        kde = kde_report(graph, row.eps_hat, config.kind)
        row.kde_max_error = kde.max_error
        row.weight_discrepancy = kde.weight_discrepancy

        if self.table is None:
            row.flags.append("no-oracle")
            return
        row.continuum = self.table.eigenvalues(eig.k).tolist()
        row.clusters = self._cluster_errors(eig)
        last = self._tick(row, "compare", start, last)

        if plan is not None and quadrature is not None:
            self._alignment(row, eig, cloud, plan, quadrature, op.degrees)
            self._tick(row, "alignment", start, last)

    def _cluster_errors(self, eig: EigenResult) -> list[ClusterError]:
        assert self.table is not None
        out = []
        values = eig.eigenvalues
        for index, (lo, hi) in enumerate(self.table.slots()):
            if lo >= min(self.config.k, values.size):
                break
            hi = min(hi, values.size)
            lam = self.table.entries[index].eigenvalue
            graph_mean = float(np.mean(values[lo:hi]))
            out.append(
                ClusterError(
                    index=index,
                    start=lo,
                    stop=hi,
                    lambda_continuum=lam,
                    lambda_graph=graph_mean,
                    relative_error=(
                        None if lam == 0 else abs(graph_mean - lam) / lam
                    ),
                )
            )
        return out

    def _alignment(
        self,
        row: RowResult,
        eig: EigenResult,
        cloud: PointCloud,
        plan: TransportPlan,
        quadrature: PointCloud,
        deg: Array,
    ) -> None:
        assert self.table is not None and row.h is not None
        vectors = eig.eigenvectors
        if self.config.kind == "symmetric":
            # D^{1/2} v_rw = v_sym
            vectors = vectors / np.sqrt(deg)[:, np.newaxis]
        rho = weight_density(self.config.kind, quadrature)
        partition = voronoi_partition(cloud, quadrature)
        updated = []
        for cluster in row.clusters:
            if cluster.lambda_continuum == 0 or cluster.stop - cluster.start < (
                self.table.entries[cluster.index].multiplicity
            ):
                updated.append(cluster)
                continue
            interp: list[float] = []
            voronoi: list[float] = []
            try:
                for j in range(cluster.start, cluster.stop):
                    u = vectors[:, j]
                    field_i = interpolate_I(
                        u, plan, quadrature, row.h, self.kernel, rho=rho
                    )
                    interp.append(
                        align_eigenspace(field_i, self.table, cluster.index).subspace_error
                    )
                    field_v = voronoi_extend(u, partition, quadrature, rho)
                    voronoi.append(
                        align_eigenspace(field_v, self.table, cluster.index).subspace_error
                    )
            except RegimeError as err:
                logger.info("row n=%d seed=%d: %s", row.n, row.seed, err)
                if "no-interpolation" not in row.flags:
                    row.flags.append("no-interpolation")
                updated.append(cluster)
                continue
            except QuadratureTooCoarseError as err:
                logger.warning("row n=%d seed=%d: %s", row.n, row.seed, err)
                row.flags.append("quadrature-too-coarse")
                updated.append(cluster)
                continue
            updated.append(
                replace(
                    cluster,
                    alignment_interpolated=max(interp),
                    alignment_voronoi=max(voronoi),
                )
            )
        row.clusters = updated


def _continuum_table(config: StudyConfig) -> SpectrumTable | None:
    count = config.k + 2
    if config.density.is_uniform:
        return analytic_spectrum(config.manifold, config.density, config.kind, count)
    if config.manifold.kind == "torus":
        rho = "one" if config.kind == "unnormalized" else "density"
        try:
            return continuum_oracle_spectrum(
                config.manifold, config.density, rho=rho, k=count
            )
        except OracleNotConvergedError as err:
            logger.warning("no continuum spectrum: %s", err)
            return None
    logger.warning(
        "no continuum spectrum for density %r on %s",
        config.density.name,
        config.manifold.name,
    )
    return None


def run_study(config: StudyConfig) -> ConvergenceReport:
    """
    Run every ``(n, seed)`` row of a study and fit the convergence rate.

    The rate is the log-log slope of the median cluster relative error of
    the first nonzero continuum eigenvalue against ``n``, over rows that
    are inside the regime, converged and on time.

    Raises
    ------
    ConfigError
        If the estimated memory at the largest ``n`` exceeds
        ``config.memory_limit``.
    """
    needed = config.estimated_bytes()
    if needed > config.memory_limit:
        raise ConfigError(
            f"estimated memory {needed / 2**30:.2f} GiB at n={config.n_grid[-1]} "
            f"exceeds the limit of {config.memory_limit / 2**30:.2f} GiB"
        )
    table = _continuum_table(config)
    runner = _RowRunner(config, table)
    jobs = [(n, seed) for n in config.n_grid for seed in config.seeds]
    logger.info(
        "running %d rows on %s with %d worker(s)",
        len(jobs),
        config.manifold.name,
        config.workers,
    )
    with lobpcg_quiet(), ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = list(pool.map(lambda job: runner(*job), jobs))

    outside = sum("out-of-regime" in row.flags for row in rows)
    if outside:
        logger.warning(
            "%d of %d rows have h <= (m + 5) eps_hat and are left out of the "
            "rate fit; raise [graph] h_scale or use h_rule = fixed",
            outside,
            len(rows),
        )

    report = ConvergenceReport(config=config.to_dict(), rows=rows, timings=config.timings)
    if table is None:
        return report
    rate_index = next(
        (i for i, e in enumerate(table.entries) if e.eigenvalue > 0), None
    )
    report.rate_index = rate_index
    if rate_index is None:
        return report
    for n in config.n_grid:
        errs = []
        for row in rows:
            cluster = row.cluster(rate_index)
            if row.n == n and row.usable and cluster is not None:
                if cluster.relative_error is not None:
                    errs.append(cluster.relative_error)
        if errs:
            report.medians.append((n, float(np.median(errs))))
    fit_points = [(n, e) for n, e in report.medians if e > 0]
    if len(fit_points) >= 2:
        report.slope, report.stderr = fit_rate(fit_points)
        logger.info(
            "fitted rate %.3f +/- %.3f over %d grid values",
            report.slope,
            report.stderr,
            len(fit_points),
        )
    else:
        logger.info("fewer than two usable grid values; no rate fitted")
    return report
