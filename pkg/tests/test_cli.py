import math
import shutil
from pathlib import Path

import pytest

from fracporo.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from fracporo.io import read_parameter_table_csv

SYNTH = Path(__file__).resolve().parents[1] / "data" / "synthetic"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_ml_prints_value(capsys):
    code, out, _ = run(capsys, "ml", "--a", "0.5", "--b", "1", "--z", "-1")
    assert code == EXIT_OK
    assert float(out) == pytest.approx(0.4275836, abs=1e-7)


def test_global_flags_before_or_after_subcommand(capsys):
    _, before, _ = run(capsys, "--tol", "1e-6", "ml", "--a", "1", "--b", "1", "--z", "-2")
    _, after, _ = run(capsys, "ml", "--a", "1", "--b", "1", "--z", "-2", "--tol", "1e-6")
    assert before == after
    assert float(before) == pytest.approx(math.exp(-2), rel=1e-6)


def test_usage_and_input_errors(capsys, tmp_path):
    assert run(capsys, "ml", "--a", "-1", "--b", "1", "--z", "0")[0] == EXIT_INPUT
    assert run(capsys, "bogus")[0] == EXIT_INPUT
    code, _, err = run(capsys, "fit", "--input", str(tmp_path / "missing.csv"))
    assert code == EXIT_INPUT and "no such file" in err.lower()
    code, out, err = run(capsys, "analytic", "--plot")
    assert code == EXIT_INPUT and out == "" and "--out" in err
    assert run(capsys, "--help")[0] == EXIT_OK


def test_analytic_grid_csv(capsys):
    code, out, _ = run(capsys, "analytic", "--grid", "5x4", "--t-max", "0.01")
    assert code == EXIT_OK
    rows = data_rows(out)
    assert rows[0] == "z_m,t_s,value" and len(rows) == 1 + 5 * 4
    assert "# field = pressure" in out


def test_analytic_flux_and_plot(capsys, tmp_path):
    out = tmp_path / "flux.csv"
    code, _, _ = run(capsys, "analytic", "--field", "flux", "--grid", "3x6", "--t-max", "1", "--out", str(out), "--plot")
    assert code == EXIT_OK
    assert len(data_rows(out.read_text())) == 1 + 6
    assert (tmp_path / "flux.png").stat().st_size > 0


def test_solve_writes_blocks_and_figures(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "solve", "--grid", "11", "--dt", "1e-3", "--t-max", "0.01", "--out", str(out), "--plot")
    assert code == EXIT_OK
    rows = data_rows(out.read_text())
    assert rows[0] == "field,z_m,t_s,value"
    fields = {r.split(",")[0] for r in rows[1:]}
    assert fields == {"pressure", "displacement", "flux_base", "reaction_top"}
    assert (tmp_path / "s.png").is_file() and (tmp_path / "s-displacement.png").is_file()


def test_solve_relax_mode(capsys):
    code, out, _ = run(capsys, "solve", "--mode", "relax", "--grid", "7", "--dt", "1", "--t-max", "20", "--every", "5")
    assert code == EXIT_OK
    assert "reaction_top" in out


def test_fit_single_file(capsys, tmp_path):
    out = tmp_path / "fit.csv"
    code, _, _ = run(capsys, "fit", "--input", str(SYNTH / "TK11BC.csv"), "--starts", "1", "--out", str(out), "--plot")
    assert code == EXIT_OK
    (row,) = read_parameter_table_csv(out)
    assert row["sample"] == "TK11BC" and row["h_mm"] == 3.7
    assert row["beta"] == pytest.approx(0.73, abs=0.02)
    assert (tmp_path / "fit.png").is_file()


def test_fit_batch(capsys, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for name in ("TK11BC.csv", "TK11BV.csv"):
        shutil.copy(SYNTH / name, src / name)
    code, out, _ = run(capsys, "fit", "--batch", str(src), "--starts", "1", "--jobs", "1")
    assert code == EXIT_OK
    assert len(data_rows(out)) == 3
    rows = read_parameter_table_csv(src / "fits" / "summary.csv")
    assert [r["sample"] for r in rows] == ["TK11BC", "TK11BV"]
    assert (src / "fits" / "TK11BV.fit.csv").is_file()


def test_fit_requires_height(capsys, tmp_path):
    path = tmp_path / "noh.csv"
    path.write_text("time_s,displacement_m\n1,1e-5\n2,2e-5\n3,2.5e-5\n")
    code, _, err = run(capsys, "fit", "--input", str(path), "--starts", "1")
    assert code == EXIT_INPUT and "h_mm" in err


def test_anova_and_summary(capsys, tmp_path):
    out = tmp_path / "a.csv"
    code, text, _ = run(capsys, "anova", "--field", "beta", "--out", str(out), "--plot")
    assert code == EXIT_OK
    assert "p = 0.00104" in text and "TK16BC1" in text
    rows = read_parameter_table_csv(out)
    assert {r["status"] for r in rows} == {"kept", "excluded"}
    assert (tmp_path / "a.png").is_file()
    code, text, _ = run(capsys, "summary")
    assert code == EXIT_OK
    assert "Body Ver" in text and "0.57" in text


def test_weight_loss(capsys):
    code, out, _ = run(capsys, "weight-loss", "--n", "3", "--w0", "0.01")
    assert code == EXIT_OK
    rows = data_rows(out)
    assert rows[0] == "t_s,weight_kg,weight_single_term_kg"
    assert float(rows[1].split(",")[1]) == 0.01
    assert float(rows[3].split(",")[1]) < 0.01


def test_validate_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", "--only", "gl.binomial_weights", "anova.textbook")
    assert code == EXIT_OK and "pass  gl.binomial_weights" in out
    code, out, _ = run(capsys, "validate", "--only", "gl.binomial_weights", "--mutate", "gl-coefficient")
    assert code == EXIT_FAIL and "FAIL  gl.binomial_weights" in out
    code, out, _ = run(capsys, "validate", "--list")
    assert code == EXIT_OK and "lanczos-coefficient" in out
    report = tmp_path / "v.csv"
    code, _, _ = run(capsys, "validate", "--only", "anova.t_squared", "--out", str(report), "--plot")
    assert code == EXIT_OK
    assert read_parameter_table_csv(report, required=("check", "status"))[0]["status"] == "pass"
    assert (tmp_path / "v.png").is_file()
