import csv
import json

import pytest

from manifold_spectra.report import (
    CSV_COLUMNS,
    emit,
    emit_all,
    load_report,
    report_to_dict,
)
from manifold_spectra.study import ConvergenceReport


def test_json_round_trip_is_byte_identical(tmp_path, synthetic_report):
    first = emit(synthetic_report, "json", tmp_path / "a.json")
    second = emit(load_report(first), "json", tmp_path / "b.json")
    assert first.read_bytes() == second.read_bytes()


def test_json_is_canonical(tmp_path, synthetic_report):
    text = emit(synthetic_report, "json", tmp_path / "r.json").read_text()
    data = json.loads(text)
    assert text == json.dumps(data, sort_keys=True, indent=2) + "\n"
    assert data["slope"] == -0.25
    assert data["medians"][0] == [100, 0.2 * 100**-0.25]


def test_timings_are_optional(synthetic_report):
    data = report_to_dict(synthetic_report)
    assert all("timings" not in row for row in data["rows"])
    synthetic_report.timings = True
    data = report_to_dict(synthetic_report)
    assert all(row["timings"] == {"total": 1.0} for row in data["rows"])


def test_non_finite_values_become_null(tmp_path, synthetic_report):
    synthetic_report.rows[0].eps_hat = float("nan")
    synthetic_report.rows[1].margin = float("-inf")
    path = emit(synthetic_report, "json", tmp_path / "r.json")
    rows = json.loads(path.read_text())["rows"]
    assert rows[0]["eps_hat"] is None
    assert rows[1]["margin"] is None


def test_csv(tmp_path, synthetic_report):
    synthetic_report.rows[3].flags = ["disconnected", "no-interpolation"]
    path = emit(synthetic_report, "csv", tmp_path / "r.csv")
    with path.open(newline="") as fh:
        lines = list(csv.reader(fh))
    assert tuple(lines[0]) == CSV_COLUMNS
    body = [dict(zip(CSV_COLUMNS, line)) for line in lines[1:]]
    assert len(body) == len(synthetic_report.rows) * synthetic_report.k
    first, second = body[0], body[1]
    assert (first["n"], first["seed"], first["index"]) == ("100", "0", "0")
    assert first["relative_error"] == ""
    assert first["cluster"] == "0"
    assert first["eps_hat"] == ""
    assert float(second["relative_error"]) == pytest.approx(0.2 * 100**-0.25)
    assert second["cluster"] == "1"
    assert body[-1]["flags"] == "disconnected;no-interpolation"


def test_csv_headers_only(tmp_path):
    report = ConvergenceReport(config={"k": 3})
    path = emit(report, "csv", tmp_path / "empty.csv")
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_svg(tmp_path, synthetic_report):
    path = emit(synthetic_report, "svg", tmp_path / "r.svg")
    assert path.read_text().startswith("<?xml")


def test_unknown_format(tmp_path, synthetic_report):
    with pytest.raises(ValueError, match="unknown report format 'pdf'"):
        emit(synthetic_report, "pdf", tmp_path / "r.pdf")  # type: ignore[arg-type]


def test_emit_all(tmp_path, synthetic_report):
    out = tmp_path / "nested" / "dir"
    paths = emit_all(synthetic_report, out, ("json", "csv"), stem="study")
    assert paths == [out / "study.json", out / "study.csv"]
    assert all(p.exists() for p in paths)


def test_load_errors(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"rows": []}')
    with pytest.raises(ValueError, match="not a convergence report"):
        load_report(path)
    with pytest.raises(OSError):
        load_report(tmp_path / "missing.json")
