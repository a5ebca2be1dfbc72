import csv
import io
import json
import subprocess
import sys

import pytest
import yaml

from holocurve.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from holocurve.scenario import ScenarioError, build_scenario, load_scenario, run


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(tmp_path, doc, name="s.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc) if isinstance(doc, dict) else doc)
    return str(path)


# run -----------------------------------------------------------------------------------------------


def test_empty_task_list(tmp_path, capsys):
    path = write(tmp_path, {"schema_version": "1", "tasks": []})
    code, out, _ = run_cli(capsys, "run", "--scenario", path)
    report = json.loads(out)
    assert code == EXIT_OK
    assert report["checks"] == []
    assert report["status"] == "pass"
    assert report["schema_version"] == "1"


def test_hardy_basics(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "hardy-basics")
    report = json.loads(out)
    assert code == EXIT_OK
    rows = {(c["task"], c["check"]): c for c in report["checks"]}
    origin = rows[("curvature:hardy", "K(0)")]
    assert "value -1," in origin["detail"]
    asserted = [c for c in report["checks"] if c["asserted"] and c["relation"] == "<="]
    assert all(c["value"] < 1e-8 for c in asserted if not c["task"] == "load")


def test_negative_controls_fail_by_name(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "negative-controls")
    report = json.loads(out)
    assert code == EXIT_FAIL
    failing = {c["task"] for c in report["checks"] if c["passed"] is False}
    assert failing == {"transposed-curve", "literal-index-set", "unrelated-curves", "hardy-vs-bergman-claimed-equivalent"}


def test_csv_format(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "hardy-basics", "--format", "csv", "--task", "holomorphy")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK
    assert {r["task"] for r in rows} == {"load", "holomorphy:hardy"}
    assert all(r["passed"] == "True" for r in rows)


def test_task_filter(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "corpus", "--task", "shift_similarity:hardy~shifted")
    report = json.loads(out)
    assert code == EXIT_OK
    assert {c["task"] for c in report["checks"] if c["task"] != "load"} == {"shift_similarity:hardy~shifted"}


def test_output_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "run", "--scenario", "hardy-basics", "--task", "pair_decomposition", "--output", str(target))
    assert code == EXIT_OK and out == ""
    assert json.loads(target.read_text())["status"] == "pass"


# verify ------------------------------------------------------------------------------------------------


def test_verify_corpus(capsys):
    code, out, _ = run_cli(capsys, "verify")
    assert code == EXIT_OK
    assert "PASS: 0 failed" in out
    assert "wall time" in out


def test_verify_tight_tolerance_lists_margins(capsys):
    # rank-two residuals sit a little above 1e-14
    code, out, _ = run_cli(capsys, "verify", "--scenario", "corpus", "--task", "intertwining", "--tolerance", "1e-14")
    assert code == EXIT_FAIL
    failed = [line for line in out.splitlines() if line.strip().startswith("FAILED")]
    assert failed
    assert all("margin" in line for line in failed)


def test_verify_fd_check(capsys):
    code, out, _ = run_cli(capsys, "verify", "--scenario", "hardy-basics", "--task", "holomorphy", "--fd-check")
    assert code == EXIT_OK
    assert "fd-check" in out


def test_max_order_override():
    s = load_scenario("hardy-basics")
    report = run(s, max_order=(1, 1), task_filter=["monomial"])
    rows = [c for c in report.checks if c.task == "monomial:hardy"]
    assert rows and all(c.passed for c in rows)


# input errors -------------------------------------------------------------------------------------------


def test_missing_scenario(capsys):
    code, _, err = run_cli(capsys, "run", "--scenario", "no-such-scenario")
    assert code == EXIT_INPUT
    assert "not found" in err


def test_schema_violation(tmp_path, capsys):
    path = write(tmp_path, {"schema_version": "1", "bogus": 1})
    code, _, err = run_cli(capsys, "run", "--scenario", path)
    assert code == EXIT_INPUT
    assert "schema error" in err


def test_wrong_schema_version(tmp_path, capsys):
    path = write(tmp_path, {"schema_version": "2"})
    assert run_cli(capsys, "run", "--scenario", path)[0] == EXIT_INPUT


def test_unparseable_yaml(tmp_path, capsys):
    path = write(tmp_path, "schema_version: [1\n")
    assert run_cli(capsys, "run", "--scenario", path)[0] == EXIT_INPUT


def test_unknown_curve_reference():
    doc = {
        "schema_version": "1",
        "kernels": {"h": {"preset": "hardy"}},
        "curves": {"c": {"F": "h"}},
        "tasks": [{"task": "holomorphy", "curve": "missing"}],
    }
    with pytest.raises(ScenarioError):
        build_scenario(doc)


def test_unknown_kernel_reference():
    doc = {"schema_version": "1", "curves": {"c": {"F": "nope"}}}
    with pytest.raises(ScenarioError):
        build_scenario(doc)


def test_unknown_task_kind():
    doc = {"schema_version": "1", "tasks": [{"task": "levitate"}]}
    with pytest.raises(ScenarioError):
        build_scenario(doc)


def test_point_forms():
    doc = {"schema_version": "1", "sample_points": [0, 0.5, [0.1, 0.2], [[0.1, 0.0], [0.0, 0.3]]]}
    s = build_scenario(doc)
    assert [p.tolist() for p in s.sample_points] == [[0j], [0.5 + 0j], [0.1 + 0.2j], [0.1 + 0j, 0.3j]]


# grid -------------------------------------------------------------------------------------------------------


def grid_rows(capsys, *extra):
    code, out, _ = run_cli(capsys, "grid", "--scenario", "corpus", *extra)
    return code, list(csv.DictReader(io.StringIO(out)))


def center_value(rows):
    return next(float(r["value"]) for r in rows if float(r["re"]) == 0 and float(r["im"]) == 0)


def test_grid_hardy(capsys):
    code, rows = grid_rows(capsys, "--curve", "hardy", "--radius", "0.5", "--size", "5")
    assert code == EXIT_OK
    assert len(rows) == 25
    assert center_value(rows) == pytest.approx(-1.0, abs=1e-8)
    assert all(r["flag"] == "" for r in rows)


def test_grid_bergman(capsys):
    _, rows = grid_rows(capsys, "--curve", "bergman", "--radius", "0.5", "--size", "5")
    assert center_value(rows) == pytest.approx(-2.0, abs=1e-8)


def test_grid_outside_disk_is_flagged(capsys):
    _, rows = grid_rows(capsys, "--curve", "hardy", "--radius", "1.2", "--size", "5")
    flags = {r["flag"] for r in rows}
    assert "outside-domain" in flags
    assert "truncation" in flags


def test_grid_json_and_unknown_curve(capsys):
    code, out, _ = run_cli(capsys, "grid", "--scenario", "corpus", "--curve", "hardy", "--size", "1", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(-1.0)
    code, _, _ = run_cli(capsys, "grid", "--scenario", "corpus", "--curve", "nope")
    assert code == EXIT_INPUT


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "holocurve", "verify", "--scenario", "hardy-basics", "--task", "curvature"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "curvature:hardy" in proc.stdout
