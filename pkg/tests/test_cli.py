import csv
import io
import subprocess
import sys

import pytest

from tasekit import cli, numkit


def _rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def _meta(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_stiff_ode_run_is_bounded(capsys):
    code, out, _ = run(capsys, "run-case", "--case", "ode-stiff", "--scheme", "ERK2", "--tase", "2", "--dt-ratio", "1e4")
    assert code == 0
    (row,) = _rows(out)
    assert row["diverged"] == "false" and row["n_steps"] == "10"
    assert 0 < float(row["linf_rel"]) < 1
    assert _meta(out)["target"] == "exact"


def test_plain_polar_run_reports_divergence_as_data(capsys):
    code, out, err = run(capsys, "run-case", "--case", "polar", "--scheme", "ERK2", "--tase", "0", "--dt", "2e-3")
    assert code == 0
    (row,) = _rows(out)
    assert row["diverged"] == "true" and row["l2_rel"] == "inf"
    assert "DIVERGED" in err


def test_explicit_beyond_its_limit_diverges(capsys):
    code, out, _ = run(capsys, "run-case", "--case", "diffusion-periodic", "--tase", "0", "--dt-ratio", "1.1")
    assert code == 0
    assert _rows(out)[0]["diverged"] == "true"


@pytest.mark.parametrize("argv", [
    ["run-case", "--case", "no-such-case"],
    ["run-case", "--case", "ode-stiff", "--dt", "1", "--steps", "3"],
    ["run-case", "--case", "ode-stiff", "--scheme", "RK9"],
    ["run-case", "--case", "diffusion-periodic", "--split-mode", "split"],
    ["run-case", "--case", "polar", "--bc-mode", "wrong"],
    ["run-case", "--case", "power-law", "--split-mode", "split"],
    ["run-case", "--case", "ode-linear", "--scheme", "SDIRK2", "--tase", "2"],
    ["run-case", "--case", "ode-linear", "--dt", "-1"],
    ["converge", "--case", "ode-linear", "--samples", "3"],
    ["stability-map", "--grid", "1"],
    ["frobnicate"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_numerical_failure_exits_3(capsys, monkeypatch):
    def boom(*a, **k):
        raise numkit.SingularMatrixError(0, 0.0, 1.0)

    monkeypatch.setattr(cli, "integrate", boom)
    code, _, err = run(capsys, "run-case", "--case", "ode-linear")
    assert code == 3 and "numerical failure" in err


def test_run_case_writes_profile(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code, _, _ = run(capsys, "run-case", "--case", "diffusion-dirichlet", "--out", str(out))
    assert code == 0
    prof = (tmp_path / "run_profile.csv").read_text()
    rows = _rows(prof)
    assert len(rows) == 29 and set(rows[0]) == {"index", "point", "initial", "final", "target"}


def test_identical_config_gives_identical_bytes(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "converge", "--case", "diffusion-quasi-steady", "--steps", "50", "--seed", "7",
                   "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "# seed=7" in paths[0].read_text()


def test_converge_table_and_order(capsys):
    code, out, _ = run(capsys, "converge", "--case", "ode-linear", "--tase", "0", "--steps", "100")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 4
    assert [int(r["n_steps"]) for r in rows] == [100, 200, 400, 800]
    assert float(_meta(out)["observed_order_l2"]) == pytest.approx(1.0, abs=0.1)


def test_converge_second_order_fourier(capsys):
    code, out, _ = run(capsys, "converge", "--case", "diffusion-quasi-steady", "--steps", "50")
    assert code == 0
    assert float(_meta(out)["observed_order_linf"]) == pytest.approx(2.0, abs=0.25)


def test_converge_fourth_order_steady_scenario(capsys):
    code, out, _ = run(capsys, "converge", "--case", "diffusion-steady")
    assert code == 0
    assert float(_rows(out)[0]["dt_ratio"]) == pytest.approx(8.06, abs=0.01)
    assert float(_meta(out)["observed_order_linf"]) == pytest.approx(4.0, abs=0.25)


def test_wrong_boundary_variant_is_selectable(capsys):
    _, good, _ = run(capsys, "run-case", "--case", "diffusion-dirichlet")
    _, bad, _ = run(capsys, "run-case", "--case", "diffusion-dirichlet", "--bc-mode", "wrong")
    assert float(_rows(bad)[0]["linf_rel"]) > 10 * float(_rows(good)[0]["linf_rel"])
    assert _meta(bad)["mode"] == "tase-split"


def test_stability_map_counts(capsys):
    code, out, err = run(capsys, "stability-map", "--scheme", "ERK2", "--tase", "2", "--window", "log-radial",
                         "--grid", "41")
    assert code == 0 and "unstable left-half cells = 0" in err
    assert "re,im,abs_sigma" in out
    code, _, err = run(capsys, "stability-map", "--scheme", "ERK4", "--tase", "4", "--alpha", "1.345",
                       "--window", "log-radial", "--grid", "81")
    assert code == 0 and "unstable left-half cells = 0" not in err


def test_imag_scan(tmp_path, capsys):
    out = tmp_path / "imag.csv"
    code, _, _ = run(capsys, "imag-scan", "--scheme", "ERK4", "--tase", "4", "--alpha", "5.38",
                     "--samples", "20001", "--out", str(out))
    assert code == 0
    peak = float(_meta(out.read_text())["max_abs_sigma"])
    assert peak == pytest.approx(1.02, abs=0.01)


def test_alpha_table(capsys, tmp_path):
    out = tmp_path / "alpha.csv"
    code, text, _ = run(capsys, "alpha-table", "--out", str(out))
    assert code == 0
    assert "0.40  1.20  2.80" in text
    rows = _rows(out.read_text())
    assert len(rows) == 10
    assert {r["alpha_min"] for r in rows if r["scheme"] == "ERK1"} == {"0.50"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tasekit", "alpha-table"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ERK4" in proc.stdout
