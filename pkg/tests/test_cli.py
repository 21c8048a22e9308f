import json
import logging
import os

import pytest

from app.cli import (
    EXIT_ACCEPTANCE,
    EXIT_ERROR,
    EXIT_OK,
    ReproducePipeline,
    configure_logging,
    run,
)
from app.config import RunConfig, config
from app.modules.progress_tracker import ProgressTracker
from app.serialization import encode_float


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_eta_json(capsys):
    assert run(["eta", "--window", "10"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["spec"] == "eta(3t)^8"
    assert payload["series"]["coeffs"] == [[1, "1"], [4, "-8"], [7, "20"]]


def test_eta_csv(capsys):
    assert run(["eta", "--window", "8", "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["n,coefficient", "1,1", "4,-8", "7,20"]


def test_eta_fractional_exponent_is_rejected(capsys):
    assert run(["eta", "--spec", "1:1"]) == EXIT_ERROR
    error = error_of(capsys)
    assert error["error"] == "FractionalLeadingExponentException"
    assert error["details"] == {"sum_delta_r": 1, "required_divisor": 24}


@pytest.mark.parametrize("argv", [[], ["bogus"], ["eta", "--bogus"], ["eta", "--window", "ten"]])
def test_usage_errors_exit_one(capsys, argv):
    assert run(argv) == EXIT_ERROR
    assert error_of(capsys)["error"] == "InvalidInputException"


def test_single_kloosterman_sum(capsys):
    assert run(["kloosterman", "--m", "1", "--n", "1", "--c", "3"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["value"]["decimal"] == "-1"


def test_kloosterman_scan(capsys):
    assert run(["kloosterman", "--n-max", "2", "--scan-c-max", "2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["pass"] is True


def test_kloosterman_scan_failure_exits_two(capsys):
    argv = ["kloosterman", "--n-max", "2", "--scan-c-max", "2", "--tol", "0"]
    assert run(argv) == EXIT_ACCEPTANCE
    assert error_of(capsys)["details"] == {"failed_checks": ["kloosterman_vanishing"]}


def test_kloosterman_scan_hypothesis(capsys):
    assert run(["kloosterman", "--m", "3", "--n-max", "2", "--scan-c-max", "2"]) == EXIT_ERROR
    assert error_of(capsys)["error"] == "HypothesisViolationException"


def test_poincare_csv(capsys):
    argv = ["poincare", "--n", "1,4", "--c-max", "288", "--format", "csv"]
    assert run(argv) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "m,k,N,n,value,tail_bound,c_max"
    assert len(lines) == 3


def test_poincare_empty_sum(capsys):
    assert run(["poincare", "--kind", "constant", "--c-max", "5"]) == EXIT_ERROR
    assert error_of(capsys)["error"] == "EmptySumException"


def test_lvalues_csv_header(capsys, golden):
    argv = ["lvalues", "--beta", "1.0468", "--window", "40", "--format", "csv"]
    assert run(argv) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == golden("lvalues_header.csv").strip()
    assert [line.split(",")[0] for line in lines[1:]] == ["3", "6", "9", "12", "15"]
    _, closed, oracle, band = lines[1].split(",")
    assert closed == encode_float(float(closed))["decimal"]
    assert oracle == band == ""


def test_lvalues_bad_anchors(capsys):
    argv = ["lvalues", "--beta", "1.0468", "--window", "40", "--anchors", "3=1.0"]
    assert run(argv) == EXIT_ERROR


@pytest.mark.parametrize(
    "argv",
    [
        ["congruence", "--statement", "unit", "--window", "60"],
        ["congruence", "--statement", "families", "--window", "60"],
        ["congruence", "--statement", "d-power", "--t", "2", "--window", "60"],
        ["congruence", "--statement", "d-power", "--alpha", "1/2", "--window", "60"],
    ],
)
def test_congruence_statements_pass(capsys, argv):
    assert run(argv) == EXIT_OK
    reports = json.loads(capsys.readouterr().out)["reports"]
    assert reports and all(r["pass"] for r in reports)


def test_congruence_scan(capsys):
    argv = ["congruence", "--statement", "scan", "--t", "2", "--max-modulus", "9", "--window", "60"]
    assert run(argv) == EXIT_OK
    families = json.loads(capsys.readouterr().out)["families"]
    assert [9, 6] in [[f["modulus"], f["residue"]] for f in families]


@pytest.mark.parametrize(
    "extra, error",
    [
        (["--r", "1"], "InvalidInputException"),
        (["--alpha", "1/3"], "NotPIntegralException"),
        (["--alpha", "x"], "InvalidInputException"),
    ],
)
def test_congruence_d_power_errors(capsys, extra, error):
    argv = ["congruence", "--statement", "d-power", "--window", "30"] + extra
    assert run(argv) == EXIT_ERROR
    assert error_of(capsys)["error"] == error


def test_density_csv(capsys, golden):
    argv = ["density", "--X", "30,60", "--t", "1,2,3,4,5", "--format", "csv"]
    assert run(argv) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == golden("density_header.csv").strip()
    assert lines[1].startswith("30,1,")
    cells = lines[1].split(",")
    assert all(cell == encode_float(float(cell))["decimal"] for cell in cells[1:])


def test_density_boundary(capsys):
    assert run(["density", "--X", "30", "--t", "1,2", "--modulus-t", "2"]) == EXIT_ERROR
    assert error_of(capsys)["error"] == "ValuationBoundaryException"


def test_config_file_and_output_path(tmp_path, capsys):
    settings = tmp_path / "run.env"
    settings.write_text("WINDOW=12\nFORMAT=csv\n")
    target = tmp_path / "eta.csv"
    assert run(["eta", "--config", str(settings), "--output", str(target)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert target.read_text().splitlines()[0] == "n,coefficient"


def test_config_file_with_unknown_key(tmp_path, capsys):
    settings = tmp_path / "run.env"
    settings.write_text("COLOR=blue\n")
    assert run(["eta", "--config", str(settings)]) == EXIT_ERROR
    assert error_of(capsys)["error"] == "InvalidConfigurationException"


def test_reproduce_needs_density_window(capsys):
    assert run(["reproduce-paper", "--window", "100"]) == EXIT_ERROR
    assert error_of(capsys)["details"]["minimum"] == 3002


def test_pipeline_marks_running_stage(tmp_path, monkeypatch):
    tracker = ProgressTracker(str(tmp_path / "progress"))
    settings = RunConfig("reproduce-paper", window=3002, c_max=90, precision_bits=128, modulus_T=8)
    pipeline = ReproducePipeline(settings, exact_window=40)
    seen = []

    def first():
        (task,) = os.listdir(tracker.progress_dir)
        seen.append(tracker.get_progress(task[:-5])["message"])
        return True

    monkeypatch.setattr(pipeline, "stages", lambda: [("first", first), ("second", lambda: False)])
    assert pipeline.execute(tracker) == {"first": True, "second": False}
    assert seen == ["running first"]
    (task,) = os.listdir(tracker.progress_dir)
    progress = tracker.get_progress(task[:-5])
    assert progress["status"] == "completed"
    assert [stage["name"] for stage in progress["stages"]] == ["first", "second"]


def test_logging_uses_configured_format(monkeypatch):
    captured = {}
    monkeypatch.setattr(logging, "basicConfig", lambda **kwargs: captured.update(kwargs))
    configure_logging()
    assert captured["format"] == config.get_log_config()["format"]
    assert captured["level"] == config.LOG_LEVEL.upper()
