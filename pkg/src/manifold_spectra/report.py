"""
Serialization of convergence reports.

JSON is the canonical dump: sorted keys, fixed indentation and shortest
round-trip float representation, so a report reloaded with `load_report`
and emitted again is byte-identical. CSV has one line per
``(n, seed, eigen-index)`` and SVG is the log-log rate plot.
"""

import csv
import json
import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any, Literal

from .plotting import RatePlot
from .study import ClusterError, ConvergenceReport, RowResult

__all__ = ["emit", "emit_all", "load_report", "report_to_dict", "CSV_COLUMNS"]

logger = logging.getLogger(__name__)

Format = Literal["json", "csv", "svg"]

CSV_COLUMNS = (
    "n",
    "seed",
    "index",
    "h",
    "eps_hat",
    "margin",
    "lambda_graph",
    "lambda_continuum",
    "relative_error",
    "cluster",
    "cluster_relative_error",
    "alignment_interpolated",
    "alignment_voronoi",
    "kde_max_error",
    "flags",
)

_SUFFIX = {"json": ".json", "csv": ".csv", "svg": ".svg"}


def _clean(value: Any) -> Any:
    """Replace non-finite floats by None, recursively."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_clean(v) for v in value]
    return value


def _row_to_dict(row: RowResult, timings: bool) -> dict[str, Any]:
    out = asdict(row)
    if not timings:
        del out["timings"]
    return out


def report_to_dict(report: ConvergenceReport) -> dict[str, Any]:
    """Plain, JSON-ready representation of a report."""
    return _clean(
        {
            "config": report.config,
            "rows": [_row_to_dict(row, report.timings) for row in report.rows],
            "rate_index": report.rate_index,
            "medians": [list(m) for m in report.medians],
            "slope": report.slope,
            "stderr": report.stderr,
            "timings": report.timings,
        }
    )


def _to_json(report: ConvergenceReport) -> str:
    return (
        json.dumps(report_to_dict(report), sort_keys=True, indent=2, allow_nan=False)
        + "\n"
    )


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value)) if math.isfinite(value) else ""
    return str(value)


def _csv_rows(report: ConvergenceReport) -> list[list[str]]:
    lines = []
    k = report.k
    for row in report.rows:
        per_index = row.relative_errors(k)
        for i in range(k):
            cluster = next(
                (c for c in row.clusters if c.start <= i < c.stop), None
            )
            values = [
                row.n,
                row.seed,
                i,
                row.h,
                row.eps_hat,
                row.margin,
                row.eigenvalues[i] if i < len(row.eigenvalues) else None,
                row.continuum[i] if i < len(row.continuum) else None,
                per_index[i],
                None if cluster is None else cluster.index,
                None if cluster is None else cluster.relative_error,
                None if cluster is None else cluster.alignment_interpolated,
                None if cluster is None else cluster.alignment_voronoi,
                row.kde_max_error,
                ";".join(row.flags),
            ]
            lines.append([_format(v) for v in values])
    return lines


def emit(report: ConvergenceReport, format: Format, path: str | Path) -> Path:
    """
    Write a report as JSON, CSV or an SVG rate plot.

    Raises
    ------
    ValueError
        For unknown formats.
    OSError
        If ``path`` cannot be written.
    """
    path = Path(path)
    if format == "json":
        path.write_text(_to_json(report))
    elif format == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(_csv_rows(report))
    elif format == "svg":
        RatePlot(report).savefig(path, format="svg")
    else:
        raise ValueError(f"unknown report format {format!r}")
    logger.info("wrote %s report to %s", format, path)
    return path


def emit_all(
    report: ConvergenceReport,
    directory: str | Path,
    formats: tuple[str, ...] = ("json", "csv", "svg"),
    stem: str = "report",
) -> list[Path]:
    """Write ``stem.<format>`` for every format into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        emit(report, fmt, directory / f"{stem}{_SUFFIX[fmt]}")  # type: ignore[arg-type]
        for fmt in formats
    ]


def _cluster_from_dict(data: dict[str, Any]) -> ClusterError:
    return ClusterError(**data)


def _row_from_dict(data: dict[str, Any]) -> RowResult:
    data = dict(data)
    clusters = [_cluster_from_dict(c) for c in data.pop("clusters", [])]
    timings = data.pop("timings", {})
    return RowResult(**data, clusters=clusters, timings=timings)


def load_report(path: str | Path) -> ConvergenceReport:
    """
    Read a JSON report written by `emit`.

    Raises
    ------
    ValueError
        If the file is not a report.
    """
    data = json.loads(Path(path).read_text())
    try:
        return ConvergenceReport(
            config=data["config"],
            rows=[_row_from_dict(r) for r in data["rows"]],
            rate_index=data["rate_index"],
            medians=[(int(n), float(e)) for n, e in data["medians"]],
            slope=data["slope"],
            stderr=data["stderr"],
            timings=data["timings"],
        )
    except (KeyError, TypeError) as err:
        raise ValueError(f"{path} is not a convergence report: {err}") from err
