import json

import numpy as np
import pytest

from earlybias.calibration import csv_to_table, table_to_curve
from earlybias.cli import main
from earlybias.ingest import ArchiveRecord, write_archive


@pytest.fixture(scope="module")
def archive(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "sim.csv"
    assert main(["simulate", "--n", "20000", "--seed", "5", "--out", str(path)]) == 0
    return path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_writes_archive_and_manifest(archive):
    lines = archive.read_text().splitlines()
    assert len(lines) == 20001
    manifest = json.loads(archive.with_name("sim.csv.manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["settings"]["seed"] == 5
    assert len(manifest["settings"]["snapshot_times"]) == 10
    assert str(archive) in manifest["outputs"]


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--n", "3000", "--seed", "9", "--out", str(a)]) == 0
    assert main(["simulate", "--n", "3000", "--seed", "9", "--workers", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--n", "0", "--out", "x.csv"],
        ["simulate", "--n", "ten", "--out", "x.csv"],
        ["simulate", "--mu-range", "1", "--out", "x.csv"],
        ["simulate"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(tmp_path, monkeypatch, capsys, argv):
    monkeypatch.chdir(tmp_path)
    code, _, err = _run(capsys, *argv)
    assert code == 1 and err


def test_missing_input_exit_2(capsys, tmp_path):
    code, _, err = _run(capsys, "calibrate", "--input", tmp_path / "nope.csv", "--collection-time", 1)
    assert code == 2 and "not found" in err


def test_calibrate_near_diagonal_at_horizon(capsys, archive):
    code, out, _ = _run(capsys, "calibrate", "--input", archive, "--collection-time", 1.0, "--no-filter")
    assert code == 0
    curve = table_to_curve(csv_to_table(out))
    assert len(curve) == 20
    big = curve.count >= 100
    m, n = curve.mean_forecast[big], curve.count[big]
    z = (curve.frequency[big] - m) / np.sqrt(m * (1 - m) / n)
    assert np.abs(z).max() < 4


def test_calibrate_midway_looks_too_low(capsys, archive):
    _, out, _ = _run(capsys, "calibrate", "--input", archive, "--collection-time", 0.5, "--no-filter")
    c = table_to_curve(csv_to_table(out))
    m = c.count > 0
    assert (c.count[m] * (c.frequency[m] - c.mean_forecast[m])).sum() > 0


def test_filter_reports_and_repeat_is_stable(capsys, archive):
    code, once, err = _run(capsys, "calibrate", "--input", archive, "--collection-time", 0.5, "--filter")
    assert code == 0 and "excluded" in err
    _, twice, _ = _run(capsys, "calibrate", "--input", archive, "--collection-time", 0.5, "--filter", "--filter")
    assert once == twice


def test_calibrate_json(capsys, archive, tmp_path):
    out = tmp_path / "cal.json"
    code, _, _ = _run(capsys, "calibrate", "--input", archive, "--collection-time", 0.7, "--format", "json", "--bins", 10, "--out", out)
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 10 and doc["view"] == "unfiltered"
    assert set(doc["rows"][0]) == {"bin_low", "bin_high", "count", "mean_forecast", "frequency", "ci_low", "ci_high"}
    manifest = json.loads((tmp_path / "cal.json.manifest.json").read_text())
    assert str(archive) in manifest["inputs"]


def test_calibrate_empty_dataset_exit_1(capsys, tmp_path):
    path = tmp_path / "a.csv"
    write_archive([ArchiveRecord("e", None, 0.3, 0.0, 0.9)], path)
    code, _, err = _run(capsys, "calibrate", "--input", path, "--collection-time", 0.5)
    assert code == 1 and "no resolved" in err


def test_compare_json(capsys, archive):
    code, out, _ = _run(capsys, "compare", "--input", archive, "--collection-time", 0.5, "--format", "json", "--resamples", 2000)
    assert code == 0
    rep = json.loads(out)
    assert rep["shift"] > 0 and rep["raw_frequency_difference"] > 0
    assert rep["p_value"] < 0.01
    assert rep["excluded_count"] == rep["excluded_events"] == rep["n_unfiltered"] - rep["n_filtered"]
    assert {r["view"] for r in rep["rows"]} == {"unfiltered", "filtered"}


def test_compare_without_excluded(capsys, archive):
    code, out, err = _run(capsys, "compare", "--input", archive, "--collection-time", 1.0, "--format", "json")
    assert code == 0 and "skipped" in err
    rep = json.loads(out)
    assert rep["shift"] == 0.0 and rep["p_value"] is None and rep["excluded_count"] == 0


def test_compare_csv_sections(capsys, archive):
    code, out, _ = _run(capsys, "compare", "--input", archive, "--collection-time", 1.0, "--bins", 5)
    assert code == 0
    summary, table = out.split("\n\n")
    assert summary.splitlines()[0] == "metric,value"
    assert "p_value," in summary
    lines = table.strip().splitlines()
    assert lines[0].startswith("view,bin_low") and len(lines) == 11


def test_compare_iso_archive(capsys, tmp_path):
    path = tmp_path / "iso.csv"
    recs = [
        ArchiveRecord(f"q{i}", "u", 0.4, 0.0, 1.8e9 if i < 3 else 1.6e9, 1.65e9, "yes" if i % 2 == 0 or i < 3 else "no")
        for i in range(40)
    ]
    recs = [r if r.outcome == "yes" or r.scheduled_resolution_time > 1.7e9 else
            ArchiveRecord(r.event_id, "u", 0.4, 0.0, 1.6e9, 1.6e9, "no") for r in recs]
    write_archive(recs, path, "iso8601")
    code, out, _ = _run(capsys, "compare", "--input", path, "--time-convention", "iso8601",
                        "--collection-time", "2024-08-01T00:00:00Z", "--format", "json", "--resamples", 1000)
    assert code == 0
    rep = json.loads(out)
    assert rep["excluded_count"] == 3 and rep["shift"] > 0
