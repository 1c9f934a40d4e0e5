import csv
import io
import json
import math
import subprocess
import sys

import pytest

from subtrace.asymptotics import RatioReport
from subtrace.cli import EXIT_DIVERGENT, EXIT_FAILED, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, main

CIRCLE = "torus:n=1,sides=6.283185307179586"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_spectrum_sphere(capsys):
    code, out, _ = run(capsys, "spectrum", "--manifold", "sphere:n=2", "--max-eig", "6")
    assert code == EXIT_OK
    assert rows(out) == [["lambda", "multiplicity", "N"], ["0", "1", "1"], ["2", "3", "4"], ["6", "5", "9"]]


def test_spectrum_circle_and_su2(capsys):
    _, out, _ = run(capsys, "spectrum", "--manifold", CIRCLE, "--max-eig", "1")
    assert rows(out)[1:] == [["0", "1", "1"], ["1", "2", "3"]]
    _, out, _ = run(capsys, "spectrum", "--manifold", "su2", "--max-eig", "0")
    assert rows(out)[1:] == [["0", "1", "1"]]


def test_count_plain_and_subordinated(capsys):
    code, out, _ = run(capsys, "count", "--manifold", CIRCLE, "--lambda-start", "100", "--points", "2")
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["lambda", "count", "asymptote"]
    assert table[1][:2] == ["100", "21"] and table[2][:2] == ["1000", "63"]
    _, out, _ = run(capsys, "count", "--manifold", CIRCLE, "--psi", "stable:alpha=1", "--lambda-start", "100")
    assert rows(out)[1] == ["100", "201", "200"]


def test_trace_examples(capsys):
    code, out, _ = run(capsys, "trace", "--manifold", CIRCLE, "--psi", "stable:alpha=1", "--t-start", "1")
    assert code == EXIT_OK
    header, row = rows(out)
    assert header == ["t", "trace", "truncation_bound", "certified", "status"]
    assert float(row[1]) == pytest.approx(1 / math.tanh(0.5), rel=1e-9)
    assert row[3:] == ["true", "ok"]
    _, out, _ = run(capsys, "trace", "--manifold", CIRCLE, "--psi", "identity", "--t-start", "50")
    assert float(rows(out)[1][1]) == pytest.approx(1.0, abs=1e-12)


def test_trace_divergent_rows(capsys):
    code, out, _ = run(capsys, "trace", "--manifold", CIRCLE, "--psi", "gamma", "--t-start", "2", "--t-factor", "0.25", "--points", "3")
    assert code == EXIT_DIVERGENT
    table = rows(out)[1:]
    assert [r[-1] for r in table] == ["ok", "divergent", "divergent"]
    assert table[-1][1:3] == ["", ""]


def test_trace_resource_exit(capsys):
    code, out, _ = run(capsys, "trace", "--manifold", "torus:n=2", "--psi", "stable:alpha=0.5", "--t-start", "0.05")
    assert code == EXIT_RESOURCE
    assert rows(out)[1][-1] == "resource"
    code, _, err = run(capsys, "spectrum", "--manifold", "torus:n=2", "--max-eig", "1e13")
    assert code == EXIT_RESOURCE and "resource" in err


def test_asymptote_command(capsys):
    code, out, _ = run(capsys, "asymptote", "--manifold", "su2", "--psi", "stable:alpha=1", "--t-start", "0.5", "--points", "2")
    assert code == EXIT_OK
    table = rows(out)
    assert float(table[1][1]) == pytest.approx(16.0, rel=1e-14)
    assert float(table[2][1]) == pytest.approx(128.0, rel=1e-14)
    _, out, _ = run(capsys, "asymptote", "--manifold", CIRCLE, "--psi", "stable:alpha=1", "--mode", "counting", "--lambda-start", "100")
    assert float(rows(out)[1][1]) == pytest.approx(200.0, rel=1e-14)


def test_verify_su2_passes(capsys):
    argv = ["verify", "--manifold", "su2", "--psi", "stable:alpha=1", "--t-start", "0.2", "--t-factor", "0.5", "--points", "5"]
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["parameter", "computed", "asymptote", "ratio"]
    assert abs(float(table[1][3]) - 1) < 0.02


def test_verify_circle_identity(capsys):
    argv = ["verify", "--manifold", CIRCLE, "--psi", "identity", "--t-start", "0.1", "--points", "4", "--format", "json"]
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["report"]["fitted_slope"] == pytest.approx(-0.5, abs=0.01)
    assert payload["exit_code"] == 0


def test_verify_gamma_flags_divergence(capsys):
    argv = ["verify", "--manifold", CIRCLE, "--psi", "gamma", "--t-start", "0.4", "--points", "4", "--format", "json"]
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_DIVERGENT
    assert "divergent" in json.loads(out)["report"]["flags"]


def test_verify_failure_exit(capsys):
    argv = ["verify", "--manifold", "su2", "--psi", "stable:alpha=1", "--t-start", "1", "--points", "4", "--tolerance", "1e-6"]
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_FAILED


@pytest.mark.parametrize(
    "argv",
    [
        ["trace", "--manifold", "torus:n=2,sides=abc", "--psi", "identity"],
        ["trace", "--manifold", "su2", "--psi", "stable:alpha=7"],
        ["trace", "--manifold", "su2", "--psi", "identity", "--t-factor", "2"],
        ["trace", "--manifold", "su2", "--psi", "identity", "--eps", "-1"],
        ["verify", "--manifold", "su2", "--psi", "identity", "--points", "3"],
        ["count", "--manifold", "su2", "--lambda-factor", "0.5"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_USAGE


def test_parse_error_diagnostic(capsys):
    code, _, err = run(capsys, "spectrum", "--manifold", "torus:n=2,sides=abc", "--max-eig", "1")
    assert code == EXIT_USAGE
    line = err.splitlines()[-1]
    assert line.index("^") - 2 == 16


def test_csv_determinism(capsys):
    argv = ["trace", "--manifold", "sphere:n=3", "--psi", "relativistic:alpha=1,m=1", "--t-start", "0.5", "--points", "6"]
    outputs = {run(capsys, *argv)[1] for _ in range(3)}
    assert len(outputs) == 1


def test_csv_number_format(capsys):
    _, out, _ = run(capsys, "trace", "--manifold", CIRCLE, "--psi", "stable:alpha=1", "--t-start", "0.1")
    value = rows(out)[1][1]
    assert float(value) == float(format(float(value), ".17g"))
    assert "," not in value and "e" not in value.lower()


def test_json_round_trip(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    argv = ["verify", "--manifold", "sphere:n=2", "--psi", "stable:alpha=1.5", "--t-start", "0.1", "--points", "4"]
    code, out, _ = run(capsys, *argv, "--format", "json", "--out", str(out_path))
    assert code == EXIT_OK and out == ""
    payload = json.loads(out_path.read_text())
    report = RatioReport.from_dict(payload["report"])
    assert RatioReport.from_json(report.to_json()) == report
    assert payload["meta"]["manifold"] == "sphere:n=2"
    assert payload["meta"]["psi"] == "stable:alpha=1.5"
    assert set(payload["meta"]) >= {"version", "wall_time_s", "command"}


def test_json_table(capsys):
    _, out, _ = run(capsys, "spectrum", "--manifold", "so3", "--max-eig", "30", "--format", "json")
    payload = json.loads(out)
    assert payload["columns"] == ["lambda", "multiplicity", "N"]
    assert payload["rows"] == [[0.0, 1, 1], [8.0, 9, 10], [24.0, 25, 35]]


def test_figures_written(capsys, tmp_path):
    fig = tmp_path / "ratio.png"
    argv = ["verify", "--manifold", "su2", "--psi", "stable:alpha=1", "--t-start", "0.2", "--points", "4", "--figure", str(fig)]
    assert run(capsys, *argv)[0] == EXIT_OK
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    stair = tmp_path / "stair.png"
    run(capsys, "spectrum", "--manifold", "sphere:n=2", "--max-eig", "400", "--figure", str(stair))
    assert stair.stat().st_size > 1000


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "subtrace.cli", "spectrum", "--manifold", "su2", "--max-eig", "3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "lambda,multiplicity,N\n0,1,1\n3,4,5\n"
