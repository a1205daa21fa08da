import json
import math
import subprocess
import sys

import pytest

from wmod.cli import main
from wmod.report import SCHEMA, Report, dump_json, rows_to_csv, worse


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_verify_exit_zero(capsys):
    code, out = run(capsys, "verify", "--n", "2", "--a", "-1/3", "--cutoff", "6")
    assert code == 0 and out.startswith("relations: pass")


def test_negative_fraction_and_complex_values(capsys):
    code, out = run(capsys, "branch", "--n", "3", "--a", "-1/3", "--cutoff", "4", "--format", "json")
    assert code == 0 and json.loads(out)["status"] == "pass"
    code, out = run(capsys, "unitarity", "--n", "1", "--a", "-1+0.5i", "-N", "6")
    assert code == 1 and "NotUnitary" in out


def test_json_is_byte_identical(capsys):
    argv = ("weights", "--n", "2", "--a", "-0.5", "--cutoff", "5", "--format", "json")
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second
    payload = json.loads(first)
    assert payload["schema"] == SCHEMA and payload["config"]["n"] == 2


def test_csv_and_output_file(capsys, tmp_path):
    target = tmp_path / "bound.csv"
    code, out = run(capsys, "bound", "--n", "2", "--a", "-0.5", "--K", "2000", "--format", "csv",
                    "--output", str(target))
    lines = target.read_text().splitlines()
    assert code == 0 and out == ""
    assert lines[0] == "L,value,running_sup" and len(lines) == 2001


def test_guard_error_is_json(capsys):
    code, out = run(capsys, "verify", "--kind", "bbl", "--a", "2")
    err = json.loads(out)
    assert code == 2 and err["error"]["type"] == "ValueError"


def test_parse_error_exit_two(capsys):
    assert main(["verify", "--n"]) == 2
    assert main(["classify", "--form", "su", "--label", "N(1,2"]) == 2
    capsys.readouterr()


def test_classify_json(capsys):
    code, out = run(capsys, "classify", "--form", "sp", "--n", "2", "--label", "M(-1,-2)")
    res = json.loads(out)["result"]
    assert code == 0 and res["integrable"] and "odd part" in res["matched_family"]


def test_global_check_single_subgroup(capsys):
    code, out = run(capsys, "global-check", "--n", "2", "--sub", "Y1", "--t", "-0.1")
    assert code == 0 and "pass" in out


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "wmod.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("wmod ")


def test_suite_passes(capsys):
    code, out = run(capsys, "suite")
    lines = out.splitlines()
    assert code == 0 and all(": pass" in line for line in lines)
    assert any(line.startswith("global X0") for line in lines)


def test_report_helpers():
    assert worse(1.0, float("nan")) == math.inf
    assert worse(1.0, 0.5) == 1.0
    r = Report("x", {"a": 1j}, "pass", 0.0)
    assert r.passed and r.to_dict()["params"]["a"] == {"re": 0.0, "im": 1.0}
    assert dump_json({"b": 1, "a": float("inf")}) == '{\n  "a": "inf",\n  "b": 1\n}\n'
    assert rows_to_csv(["x"], [[0.1]]) == "x\n0.1\n"
