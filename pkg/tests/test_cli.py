import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qubit_dephasing import QubitParams, lambda_min
from qubit_dephasing.cli import (
    PRESETS,
    SweepRow,
    SweepSpec,
    fmt,
    gnuplot_script,
    main,
    run_sweep,
    write_csv,
)
from qubit_dephasing.errors import DomainError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_fmt():
    assert fmt(None) == ""
    assert fmt(-0.0) == "0"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true"
    assert fmt(np.int64(3)) == "3"
    buf = io.StringIO()
    write_csv(buf, ("a", "b"), [(1.0, None)])
    assert buf.getvalue() == "a,b\n1,\n"


def test_trajectory_first_row(capsys):
    code, out, _ = run(capsys, "trajectory", "--lambda", "1", "--ohmicity", "1", "--temp", "1",
                       "--t-max", "20")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["t", "gamma", "gamma_cor", "gamma_tot", "chi", "abs_sigma"]
    assert rows[0][:5] == ["0"] * 5
    assert float(rows[0][5]) == pytest.approx(math.tanh(0.05) / 2, rel=1e-11)
    t = [float(r[0]) for r in rows]
    assert t[-1] == 20.0 and all(a < b for a, b in zip(t, t[1:]))
    assert "\r" not in out


def test_trajectory_sign_changes(capsys):
    _, out, _ = run(capsys, "trajectory", "--lambda", "1", "--ohmicity", "0.05", "--temp", "0.1",
                    "--t-max", "1", "--samples", "20001")
    _, rows = parse_csv(out)
    g = np.array([float(r[3]) for r in rows])
    signs = np.sign(g[1:])
    signs = signs[signs != 0]
    assert np.count_nonzero(signs[1:] != signs[:-1]) >= 3


def test_trajectory_below_threshold_nonnegative(capsys):
    _, out, _ = run(capsys, "trajectory", "--lambda", "0.001", "--ohmicity", "1", "--temp", "1",
                    "--t-max", "50", "--samples", "5001")
    _, rows = parse_csv(out)
    assert all(float(r[3]) >= 0 for r in rows)


def test_trajectory_json_and_out_file(tmp_path, capsys):
    dest = tmp_path / "traj.json"
    code, out, _ = run(capsys, "trajectory", "--lambda", "1", "--ohmicity", "1", "--temp", "1",
                       "--t-max", "2", "--samples", "5", "--format", "json", "--out", str(dest))
    assert code == 0 and out == ""
    data = json.loads(dest.read_text())
    assert data[0]["t"] == 0.0 and len(data) >= 5


def test_trajectory_preset(capsys):
    code, out, _ = run(capsys, "trajectory", "--preset", "fig2", "--samples", "101")
    assert code == 0
    header, rows = parse_csv(out)
    assert header[:3] == ["lambda", "ohmicity", "temperature"]
    assert {r[2] for r in rows} == {"0.1", "1", "10"}


def test_recoherence_json(capsys):
    code, out, _ = run(capsys, "recoherence", "--lambda", "1", "--ohmicity", "1", "--temp", "1",
                       "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["rde_count"] == 1
    assert rep["gamma_extr"] < 0
    assert rep["lambda_min"] == pytest.approx(0.0057295, rel=1e-4)
    assert rep["truncated"] is False


def test_recoherence_empty_uses_null(capsys):
    _, out, _ = run(capsys, "recoherence", "--lambda", "0.001", "--ohmicity", "1", "--temp", "1",
                    "--format", "json")
    rep = json.loads(out)
    assert rep["t_star"] is None and rep["gamma_extr"] is None and rep["rde_count"] == 0
    _, out, _ = run(capsys, "recoherence", "--lambda", "0.001", "--ohmicity", "1", "--temp", "1")
    header, rows = parse_csv(out)
    assert rows[0][header.index("t_star")] == ""


def test_scheme_check(capsys):
    code, out, _ = run(capsys, "scheme-check", "--theta-a", "0.5", "--theta-1", "0.5",
                       "--phi-1", "0", "--theta-2", str(math.pi - 0.5), "--phi-2", str(math.pi))
    rep = json.loads(out)
    assert code == 0 and rep["gram_diagonal"] is True
    assert rep["a_ratio"] == pytest.approx(1 / math.tanh(0.05), rel=1e-9)
    assert sum(rep["probabilities"]) == pytest.approx(1.0, abs=1e-12)
    _, out, _ = run(capsys, "scheme-check", "--theta-a", "0.5", "--theta-1", str(math.pi / 2),
                    "--phi-1", "0", "--theta-2", str(math.pi / 2), "--phi-2", str(math.pi / 2))
    assert json.loads(out)["gram_diagonal"] is False


def test_scheme_check_degenerate_and_invalid(capsys):
    code, out, _ = run(capsys, "scheme-check", "--theta-a", "0", "--theta-1", "0",
                       "--theta-2", str(math.pi), "--phi-2", str(math.pi))
    rep = json.loads(out)
    assert code == 0 and rep["degenerate"] is True and rep["d"] is None
    code, _, err = run(capsys, "scheme-check", "--theta-a", "4")
    assert code == 1 and "theta" in err


def test_lambda_min_map(capsys):
    code, out, _ = run(capsys, "lambda-min-map", "--s-grid", "0.5,2,2", "--t-grid", "0.5,1,2")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["s", "T", "lambda_min"]
    assert len(rows) == 4 and all(float(r[2]) > 0 for r in rows)
    assert float(rows[0][2]) == pytest.approx(lambda_min(0.5, 0.5, QubitParams(0.1)), rel=1e-11)


def test_lambda_min_map_trend(capsys):
    _, out, _ = run(capsys, "lambda-min-map", "--s-grid", "1,4,301", "--t-grid", "0.25,0.25,1")
    _, rows = parse_csv(out)
    vals = [float(r[2]) for r in rows]
    k = int(np.argmax(vals))
    assert 1.7 <= float(rows[k][0]) <= 2.3
    assert 0.05 < vals[k] < 0.1


def test_sweep_rows_and_missing_values():
    spec = SweepSpec("ohmicity", (0.5, 4.0, 15), 0.1, (0.1,))
    rows = run_sweep(spec)
    assert len(rows) == 15
    missing = [r.t_star is None for r in rows]
    assert any(missing) and not all(missing)
    idx = [i for i, m in enumerate(missing) if m]
    assert idx == list(range(idx[0], idx[-1] + 1))
    for r in rows:
        assert r.status == "ok" and r.lambda_min > 0
        if r.t_star is None:
            assert r.rde_count == 0 and r.t_star_tot == 0.0 and r.lam <= r.lambda_min * 1.3


def test_sweep_temperature_trend():
    spec = SweepSpec("ohmicity", (1.0, 2.0, 2), 1.0, (0.1, 1.0, 10.0))
    rows = [r for r in run_sweep(spec) if r.ohmicity == 1.0]
    g = [r.gamma_extr for r in rows]
    assert g[0] > g[1] > g[2]
    assert len(run_sweep(spec)) == 6


def test_sweep_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec("ohmicity", (1.0, 1.0, 5), 1.0, (0.1,))
    with pytest.raises(DomainError):
        SweepSpec("ohmicity", (0.0, 1.0, 5), 1.0, (0.1,))
    with pytest.raises(DomainError):
        SweepSpec("lambda", (0.1, 1.0, 5), 1.0, (0.1,))
    with pytest.raises(DomainError):
        SweepSpec("temperature", (0.1, 1.0, 1), 1.0, (1.0,))


def test_sweep_cli_jobs_identical(capsys):
    argv = ["sweep", "--vary", "temperature", "--grid", "0.1,4,8", "--series", "0.5,3",
            "--lambda", "1"]
    _, one, _ = run(capsys, *argv, "--jobs", "1")
    _, two, _ = run(capsys, *argv, "--jobs", "2")
    assert one == two
    header, rows = parse_csv(one)
    assert tuple(header) == SweepRow.HEADER
    assert len(rows) == 16


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nlambda = 1\nohmicity=1\ntemp = 1\nformat = json\n")
    code, out, _ = run(capsys, "recoherence", "--config", str(cfg))
    assert code == 0 and json.loads(out)["lambda"] == 1.0
    _, out, _ = run(capsys, "recoherence", "--config", str(cfg), "--lambda", "2")
    assert json.loads(out)["lambda"] == 2.0
    cfg.write_text("bogus = 3\n")
    code, _, err = run(capsys, "recoherence", "--config", str(cfg))
    assert code == 1 and "unknown key" in err


@pytest.mark.parametrize("argv", [
    ["trajectory", "--lambda", "1", "--ohmicity", "1", "--temp", "0"],
    ["trajectory", "--lambda", "-1", "--ohmicity", "1", "--temp", "1"],
    ["trajectory", "--lambda", "1", "--ohmicity", "0", "--temp", "1"],
    ["trajectory", "--lambda", "1", "--ohmicity", "1"],
    ["trajectory", "--lambda", "abc"],
    ["sweep", "--preset", "fig1"],
    ["sweep", "--lambda", "1", "--jobs", "0"],
    ["nonsense"],
    ["lambda-min-map", "--s-grid", "-1,2,3", "--t-grid", "1,2,2"],
])
def test_validation_exit_code(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert out == "" and err.startswith("error:")


def test_convergence_exit_code(capsys, monkeypatch):
    from qubit_dephasing import cli
    from qubit_dephasing.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("did not converge")
    monkeypatch.setattr(cli, "analyze", boom)
    code, _, err = run(capsys, "recoherence", "--lambda", "1", "--ohmicity", "1", "--temp", "1")
    assert code == 2 and "convergence" in err


def test_gnuplot_script(tmp_path, capsys):
    data = tmp_path / "sweep.csv"
    script = tmp_path / "plot.gp"
    code, _, _ = run(capsys, "lambda-min-map", "--s-grid", "1,2,2", "--t-grid", "1,2,2",
                     "--out", str(data), "--gnuplot-script", str(script))
    assert code == 0
    text = script.read_text()
    assert "sweep.csv" in text and "splot" in text
    assert "using 2:4" in gnuplot_script("sweep", "x.csv", vary="ohmicity")


def test_presets_cover_figures():
    assert set(PRESETS) == {"fig1", "fig2", "fig3", "fig4", "fig5"}
    assert PRESETS["fig4"]["grid"][2] == 200
    assert PRESETS["fig4"]["series"] == (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)
    assert PRESETS["fig5"]["series"] == (0.5, 1.0, 1.5, 2.0, 3.0)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qubit_dephasing", "lambda-min-map",
                           "--s-grid", "1,1,1", "--t-grid", "1,1,1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("1,1,0.00572")
