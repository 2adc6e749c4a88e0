import csv
import json
import subprocess
import sys

import pytest

from nosignal.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, run_cli

REPORT_KEYS = {"command", "config", "results", "runtime_ms", "seed"}


def run_json(argv, capsys):
    code = run_cli(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def test_verify_nosignaling(capsys):
    code, report, err = run_json(["verify-nosignaling", "--trials", "1000", "--seed", "1", "--tol", "1e-12"], capsys)
    assert code == EXIT_OK
    assert set(report) == REPORT_KEYS
    assert report["results"]["max_deviation"] <= 1e-12
    assert "max |P(0) - 1/2|" in err


def test_verify_nosignaling_flags_violation(capsys):
    code, report, _ = run_json(["verify-nosignaling", "--trials", "10", "--seed", "1", "--tol", "0"], capsys)
    if report["results"]["max_deviation"] > 0:
        assert code == EXIT_VIOLATION


def test_scenarios(capsys):
    code, report, _ = run_json(["scenarios", "--trials", "10", "--seed", "2"], capsys)
    assert code == EXIT_OK
    assert report["results"]["max_deviation"] <= 1e-12


def test_channel_run_writes_report_and_csv(tmp_path, capsys):
    out, table = tmp_path / "report.json", tmp_path / "trials.csv"
    argv = ["channel", "run", "--block-len", "32", "--trials", "50", "--seed", "7", "--calibration-samples", "200"]
    code = run_cli(argv + ["--out", str(out), "--csv", str(table)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert set(report) == REPORT_KEYS
    assert report["seed"] == 7
    assert "mutual_information" in report["results"]
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 50
    assert set(rows[0]) == {"trial_index", "intended_bit", "decoded_bit", "compression_ratio"}


def test_channel_run_byte_identical(tmp_path):
    argv = ["channel", "run", "--block-len", "16", "--trials", "30", "--seed", "3", "--calibration-samples", "100", "--no-timing"]
    out = tmp_path / "report.json"
    assert run_cli(argv + ["--out", str(out)]) == EXIT_OK
    first = out.read_bytes()
    assert run_cli(argv + ["--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == first
    assert json.loads(first)["runtime_ms"] is None


def test_oracle_enum(capsys):
    code, report, _ = run_json(["oracle", "enum", "--n", "3"], capsys)
    assert code == EXIT_OK
    case = report["results"]["cases"][0]
    assert case["strings"] == 8
    assert case["max_abs_difference"] <= 1e-12
    assert case["max_abs_difference_from_uniform"] <= 1e-12


def test_oracle_enum_with_seed(capsys):
    code, report, _ = run_json(["oracle", "enum", "--n", "4", "--seed", "9"], capsys)
    assert code == EXIT_OK
    assert len(report["results"]["cases"]) == 2


def test_measure_sample(tmp_path, capsys):
    bits = tmp_path / "bits.txt"
    code, report, _ = run_json(["measure", "sample", "--shots", "1000", "--seed", "4", "--bits-out", str(bits)], capsys)
    assert code == EXIT_OK
    assert sum(report["results"]["counts"]) == 1000
    assert len("".join(bits.read_text().split())) == 1000


def test_randomness_analyze(tmp_path, capsys):
    bits = tmp_path / "bits.txt"
    run_json(["measure", "sample", "--shots", "4096", "--seed", "4", "--bits-out", str(bits)], capsys)
    code, report, _ = run_json(
        ["randomness", "analyze", "--input", str(bits), "--seed", "1", "--calibration-samples", "200"], capsys
    )
    assert code == EXIT_OK
    res = report["results"]
    assert res["length"] == 4096
    assert res["blocks"]["count"] == 16
    assert res["borel_normality"]["passed"]


def test_randomness_analyze_raw_bytes(tmp_path, capsys):
    path = tmp_path / "zeros.bin"
    path.write_bytes(bytes(64))
    code, report, _ = run_json(
        ["randomness", "analyze", "--input", str(path), "--raw-bytes", "--seed", "1", "--calibration-samples", "100"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["results"]["length"] == 512
    assert report["results"]["blocks"]["compressible_fraction"] == 1.0


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 5, "seed": 11, "tol": 1e-12}))
    code, report, _ = run_json(["scenarios", "--config", str(cfg)], capsys)
    assert code == EXIT_OK
    assert report["config"]["trials"] == 5 and report["seed"] == 11
    code, report, _ = run_json(["scenarios", "--config", str(cfg), "--trials", "3"], capsys)
    assert report["config"]["trials"] == 3 and report["seed"] == 11


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "bogus": 2}))
    code, _, err = run_json(["scenarios", "--config", str(cfg)], capsys)
    assert code == EXIT_USAGE
    assert "bogus" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["scenarios", "--seed", "1", "--frobnicate"],
        ["scenarios"],
        ["verify-nosignaling", "--trials", "5"],
        ["channel", "run", "--trials", "5"],
        ["channel", "run", "--seed", "1", "--block-len", "4"],
        ["measure", "sample", "--shots", "10"],
        ["randomness", "analyze", "--seed", "1"],
        ["oracle", "enum", "--n", "9"],
        ["scenarios", "--seed", "1", "--trials", "0"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert run_cli(argv) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nosignal", "oracle", "enum", "--n", "2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "oracle enum"
