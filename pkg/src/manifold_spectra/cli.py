"""
The ``manifold-spectra`` command line.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .continuum import kde_report
from .eigensolve import smallest_k
from .geometry import ManifoldSpec, PointCloud, make_density, quadrature_cloud, sample
from .graph import build_graph
from .io import write_csr, write_eigen_result, write_plan, write_triplets
from .kernels import PROFILES, make_kernel
from .laplacian import assemble
from .plotting import KDEHistogramPlot
from .report import emit_all, load_report
from .study import StudyConfig, bandwidth_schedule, fit_rate, run_study
from .transport import estimate_eps

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)

_KINDS = ("un", "rw", "sym", "unnormalized", "random-walk", "symmetric")
_METRICS = {"geo": "geodesic", "geodesic": "geodesic", "euclid": "euclidean", "euclidean": "euclidean"}


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _sampling_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("sampling")
    group.add_argument("--manifold", choices=("sphere", "torus"), default="torus")
    group.add_argument("--m", type=int, default=2, help="intrinsic dimension")
    group.add_argument(
        "--density",
        choices=("uniform", "tilted", "cosine"),
        default="uniform",
    )
    group.add_argument("--amplitude", type=float, default=0.5)
    group.add_argument("--n", type=int, required=True, help="number of points")
    group.add_argument("--seed", type=int, default=0)
    return parent


def _graph_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("graph")
    group.add_argument(
        "--h",
        type=float,
        default=None,
        help="bandwidth; the default is the convergence schedule",
    )
    group.add_argument("--h-scale", type=float, default=1.0)
    group.add_argument("--kernel", choices=PROFILES, default="indicator")
    group.add_argument("--self-loops", type=_on_off, default=True, metavar="{on,off}")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of every subcommand."""
    parser = argparse.ArgumentParser(
        prog="manifold-spectra",
        description="Graph Laplacian spectra on model manifolds.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for progress, -vv for debug output",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    sampling = _sampling_parser()
    graph_opts = _graph_parser()

    study = commands.add_parser("study", help="convergence studies")
    study_cmds = study.add_subparsers(dest="action", required=True)
    run = study_cmds.add_parser("run", help="run a study from a config file")
    run.add_argument("--config", type=Path, required=True)
    run.add_argument("--out", type=Path, default=None, help="output directory")
    run.add_argument("--format", nargs="+", choices=("json", "csv", "svg"), default=None)
    run.set_defaults(func=_study_run)
    rates = study_cmds.add_parser("rates", help="print the fitted rate of a report")
    rates.add_argument("--report", type=Path, required=True)
    rates.set_defaults(func=_study_rates)

    graph = commands.add_parser("graph", help="neighbourhood graphs")
    graph_cmds = graph.add_subparsers(dest="action", required=True)
    build = graph_cmds.add_parser(
        "build", parents=[sampling, graph_opts], help="build and export a graph"
    )
    build.add_argument(
        "--kind",
        choices=_KINDS,
        default=None,
        help="export this Laplacian instead of the weights",
    )
    build.add_argument("--out", type=Path, required=True)
    build.add_argument("--format", choices=("triplets", "csr"), default="triplets")
    build.set_defaults(func=_graph_build)

    eig = commands.add_parser("eig", help="graph Laplacian eigenpairs")
    eig_cmds = eig.add_subparsers(dest="action", required=True)
    solve = eig_cmds.add_parser(
        "solve", parents=[sampling, graph_opts], help="smallest eigenpairs"
    )
    solve.add_argument("--kind", choices=_KINDS, default="un")
    solve.add_argument("--k", type=int, default=10)
    solve.add_argument("--tol", type=float, default=1e-8)
    solve.add_argument("--out", type=Path, default=None)
    solve.set_defaults(func=_eig_solve)

    transport = commands.add_parser("transport", help="transport distance")
    transport_cmds = transport.add_subparsers(dest="action", required=True)
    eps = transport_cmds.add_parser(
        "eps", parents=[sampling], help="estimate eps_hat"
    )
    eps.add_argument("--N", type=int, default=None, help="quadrature size, 20 n by default")
    eps.add_argument("--metric", choices=tuple(_METRICS), default="geo")
    eps.add_argument("--out", type=Path, default=None)
    eps.set_defaults(func=_transport_eps)

    kde = commands.add_parser("kde", help="degree vs density")
    kde_cmds = kde.add_subparsers(dest="action", required=True)
    check = kde_cmds.add_parser(
        "check", parents=[sampling, graph_opts], help="compare degrees with p"
    )
    check.add_argument("--kind", choices=_KINDS, default="un")
    check.add_argument("--plot", type=Path, default=None, help="histogram SVG")
    check.set_defaults(func=_kde_check)
    return parser


def _cloud(args: argparse.Namespace) -> PointCloud:
    manifold = ManifoldSpec(args.manifold, args.m)
    density = make_density(manifold, args.density, args.amplitude)
    return sample(manifold, density, args.n, args.seed)


def _bandwidth(args: argparse.Namespace) -> float:
    if args.h is not None:
        return float(args.h)
    return bandwidth_schedule(args.n, args.m, args.h_scale)


def _study_run(args: argparse.Namespace) -> int:
    config = StudyConfig.from_file(args.config)
    report = run_study(config)
    out = args.out or (Path(config.output_dir) if config.output_dir else Path("."))
    formats = tuple(args.format) if args.format else config.formats
    for path in emit_all(report, out, formats):
        print(path)
    _print_rate(report.slope, report.stderr)
    return 0


def _print_rate(slope: float | None, stderr: float | None) -> None:
    if slope is None:
        print("slope: undefined")
    else:
        print(f"slope: {slope:.6g} +/- {stderr:.3g}")


def _study_rates(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    for n, err in report.medians:
        print(f"n={n} median relative error={err:.6g}")
    points = [(n, e) for n, e in report.medians if e > 0]
    if len(points) >= 2:
        slope, stderr = fit_rate(points)
        _print_rate(slope, stderr)
    else:
        _print_rate(None, None)
    return 0


def _graph_build(args: argparse.Namespace) -> int:
    cloud = _cloud(args)
    kernel = make_kernel(args.kernel, args.m)
    graph = build_graph(cloud, _bandwidth(args), kernel, args.self_loops)
    matrix = graph.weights if args.kind is None else assemble(graph, args.kind).matrix
    writer = write_triplets if args.format == "triplets" else write_csr
    writer(matrix, args.out)
    print(f"n={graph.n} nnz={matrix.nnz} h={graph.h:.6g} -> {args.out}")
    return 0


def _eig_solve(args: argparse.Namespace) -> int:
    cloud = _cloud(args)
    kernel = make_kernel(args.kernel, args.m)
    graph = build_graph(cloud, _bandwidth(args), kernel, args.self_loops)
    result = smallest_k(assemble(graph, args.kind), args.k, tol=args.tol, seed=args.seed)
    for i, lam in enumerate(result.eigenvalues):
        print(f"{i} {float(lam)!r}")
    if args.out is not None:
        write_eigen_result(result, args.out)
    return 0 if result.converged else 1


def _transport_eps(args: argparse.Namespace) -> int:
    cloud = _cloud(args)
    N = 20 * args.n if args.N is None else args.N
    quadrature = quadrature_cloud(cloud.manifold, cloud.density, N, args.seed)
    plan = estimate_eps(cloud, quadrature, _METRICS[args.metric])  # type: ignore[arg-type]
    print(f"eps_hat={plan.eps_hat!r} capacity={plan.capacity}")
    if args.out is not None:
        write_plan(plan, args.out)
    return 0


def _kde_check(args: argparse.Namespace) -> int:
    cloud = _cloud(args)
    kernel = make_kernel(args.kernel, args.m)
    graph = build_graph(cloud, _bandwidth(args), kernel, args.self_loops)
    result = kde_report(graph, kind=args.kind)
    print(f"max |m_i - p(x_i)| = {result.max_error:.6g}")
    print(f"L_p h = {result.lipschitz_term:.6g}")
    print(f"weight discrepancy = {result.weight_discrepancy:.6g}")
    if args.plot is not None:
        KDEHistogramPlot(result.errors).savefig(args.plot, format="svg")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``manifold-spectra`` console script."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args))
    except (ValueError, RuntimeError) as err:
        logger.error("%s", err)
        return 2
    except OSError as err:
        logger.error("I/O error: %s", err)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
