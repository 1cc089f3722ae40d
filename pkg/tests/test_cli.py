"""Command line behavior: subcommands, exit codes, output files."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from speedlaw import read_model
from speedlaw.cli import figure_data, main

UNI_ARGS = ["--target", "uniform:-1,1", "--x0", "0", "--lambda", "0.5"]


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- synthesize ----------------------------------------------------------------


def test_synthesize_writes_model(tmp_path, capsys):
    out = tmp_path / "model.txt"
    code, stdout, _ = run(
        ["synthesize", *UNI_ARGS, "--w", "4", "--out", str(out)], capsys
    )
    assert code == 0
    assert f"wrote {out}" in stdout
    assert "w=4" in stdout and "inaccessible/inaccessible" in stdout
    model = read_model(out)
    assert model.wronskian == 4.0

    first = out.read_bytes()
    assert main(["synthesize", *UNI_ARGS, "--w", "4", "--out", str(out)]) == 0
    capsys.readouterr()
    assert out.read_bytes() == first  # reruns are byte-identical


def test_synthesize_canonical_default(tmp_path, capsys):
    out = tmp_path / "model.txt"
    code, stdout, _ = run(["synthesize", *UNI_ARGS, "--out", str(out)], capsys)
    assert code == 0
    assert read_model(out).wronskian == pytest.approx(4.0, rel=1e-12)


def test_synthesize_from_samples_csv(tmp_path, capsys):
    csv = tmp_path / "obs.csv"
    csv.write_text("value\n0.0\n1.0\n1.0\n2.0\n")
    out = tmp_path / "model.txt"
    code, _, _ = run(
        ["synthesize", "--target-csv", str(csv), "--x0", "1.0", "--lambda", "0.5",
         "--w", "1", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert read_model(out).target.atoms == ((0.0, 0.25), (1.0, 0.5), (2.0, 0.25))


@pytest.mark.parametrize(
    "argv, token",
    [
        (["synthesize", *UNI_ARGS, "--w", "5", "--out", "x.txt"], "wronskian-out-of-range"),
        (["synthesize", *UNI_ARGS, "--w", "fast", "--out", "x.txt"], "invalid-parameters"),
        (["synthesize", "--target", "uniform", "--x0", "0", "--lambda", "1",
          "--out", "x.txt"], "invalid-parameters"),
        (["synthesize", "--target", "uniform:a,b", "--x0", "0", "--lambda", "1",
          "--out", "x.txt"], "invalid-parameters"),
        (["synthesize", "--target", "cauchy:0,1", "--x0", "0", "--lambda", "1",
          "--out", "x.txt"], "invalid-parameters"),
        (["synthesize", "--x0", "0", "--lambda", "1", "--out", "x.txt"],
         "invalid-parameters"),
        (["synthesize", "--target", "uniform:-1,1", "--target-csv", "obs.csv",
          "--x0", "0", "--lambda", "1", "--out", "x.txt"], "invalid-parameters"),
        (["synthesize", "--target", "uniform:-1,1", "--x0", "2", "--lambda", "1",
          "--out", "x.txt"], "start-outside-support"),
    ],
)
def test_synthesize_input_errors(argv, token, capsys):
    code, _, stderr = run(argv, capsys)
    assert code == 2
    assert stderr.startswith(f"{token}: ")


def test_missing_required_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synthesize", "--target", "uniform:-1,1", "--out", "x.txt"])
    assert exc.value.code == 2
    capsys.readouterr()


# -- simulate -------------------------------------------------------------------


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "samples.csv"
    argv = ["simulate", *UNI_ARGS, "--w", "1", "--n", "400", "--seed", "3",
            "--out", str(out)]
    code, stdout, _ = run(argv, capsys)
    assert code == 0
    assert "400 paths via sde" in stdout
    lines = out.read_text().splitlines()
    assert lines[1] == "# engine = sde"
    assert lines[2] == "# seed = 3"
    assert lines[6] == "value"
    values = np.array([float(v) for v in lines[7:]])
    assert values.shape == (400,)
    assert np.all(np.abs(values) <= 1.0)

    first = out.read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert out.read_bytes() == first


def test_simulate_ctmc_engine(tmp_path, capsys):
    out = tmp_path / "samples.csv"
    code, stdout, _ = run(
        ["simulate", *UNI_ARGS, "--w", "1", "--engine", "ctmc", "--n", "300",
         "--n-sites", "80", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert "via ctmc" in stdout
    values = [float(v) for v in out.read_text().splitlines()[7:]]
    assert len(set(values)) <= 80


def test_simulate_rejects_both(tmp_path, capsys):
    code, _, stderr = run(
        ["simulate", *UNI_ARGS, "--w", "1", "--engine", "both",
         "--out", str(tmp_path / "s.csv")],
        capsys,
    )
    assert code == 2
    assert stderr.startswith("invalid-parameters: ")


# -- verify ---------------------------------------------------------------------


def test_verify_pass_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run(
        ["verify", *UNI_ARGS, "--w", "1", "--n", "1500", "--n-sites", "150",
         "--seed", "2", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert "verdict pass" in stdout
    payload = json.loads(out.read_text())
    assert payload["verdict"] == "pass"
    assert set(payload["engines"]) == {"sde", "ctmc"}
    assert len(payload["model_hash"]) == 12


def test_verify_prints_to_stdout(capsys):
    code, stdout, _ = run(
        ["verify", *UNI_ARGS, "--w", "1", "--engine", "sde", "--n", "1200"], capsys
    )
    assert code == 0
    payload = json.loads(stdout)
    assert payload["verdict"] == "pass"


def test_verify_truncation_failure_exits_three(capsys):
    # strict-local model with a loose guard: restarts exceed the default gate
    code, stdout, _ = run(
        ["verify", "--target", "laplace:1", "--x0", "0", "--lambda", "0.5",
         "--w", "2", "--engine", "sde", "--n", "2000", "--seed", "0",
         "--truncation", "1e-3"],
        capsys,
    )
    assert code == 3
    payload = json.loads(stdout)
    assert payload["verdict"] == "fail"
    assert payload["engines"]["sde"]["truncation_fraction"] >= 1e-3


# -- figure data ------------------------------------------------------------------


def test_figure_one_canonical_column_is_flat(tmp_path, capsys):
    out = tmp_path / "fig1.csv"
    code, _, _ = run(["figure-data", "--figure", "fig1", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,W=0.25,W=0.5,W=1,W=1.5,W=2"
    assert len(lines) == 802
    # canonical level: Brownian motion, so the column is the literal string 1.0
    assert all(line.rsplit(",", 1)[1] == "1.0" for line in lines[1:])


def test_figure_two_start_values(tmp_path, capsys):
    out = tmp_path / "fig2.csv"
    code, _, _ = run(["figure-data", "--figure", "fig2", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,X0=0,X0=0.5,X0=-1"
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert rows["0.0"][1] == "0.5"  # speed at the start equals 1/w
    assert rows["0.5"][2] == "0.5"
    assert rows["-1.0"][3] == "0.5"  # endpoint start stays defined
    left_col = [float(r[3]) for r in rows.values()]
    assert not any(math.isnan(v) for v in left_col)


def test_figure_two_endpoint_start_spans_support():
    cols, rows = figure_data("fig2")
    col = rows[:, cols.index("X0=-1")]
    inside = rows[:, 0] < 1.0
    assert np.all(np.isfinite(col[inside])) and np.all(col[inside] > 0)
    # quadratic growth toward the far end, 2 / (1 - x)^2
    np.testing.assert_allclose(col[inside], 2.0 / (1.0 - rows[inside, 0]) ** 2, rtol=1e-12)


def test_figure_unknown_code(tmp_path, capsys):
    code, _, stderr = run(
        ["figure-data", "--figure", "fig9", "--out", str(tmp_path / "f.csv")], capsys
    )
    assert code == 2
    assert stderr.startswith("unknown-figure: ")


# -- console entry point -----------------------------------------------------------


def test_console_script_smoke(tmp_path):
    out = tmp_path / "fig1.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "speedlaw.cli", "figure-data", "--figure", "fig1",
         "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert out.exists()
