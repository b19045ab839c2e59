import json
import math
import shutil
import subprocess

import pytest
from mpmath import mpf

from hankelp3 import cli
from hankelp3.errors import PrecisionExhaustedError, StepCollapseError


def run_cli(argv, capsys):
    rc = cli.main(argv)
    cap = capsys.readouterr()
    return rc, cap.out, cap.err


def test_moments_classical_stdout(capsys):
    rc, out, _ = run_cli(["moments", "--alpha", "1", "--t", "0", "--jmax", "3"], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["jmin"] == 0
    assert [float(v) for v in doc["values"]] == [1.0, 2.0, 6.0, 24.0]


def test_console_script_entrypoint():
    exe = shutil.which("hankelp3")
    assert exe, "console script not on PATH"
    res = subprocess.run(
        [exe, "moments", "--alpha", "1", "--t", "0", "--jmax", "3"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert [float(v) for v in doc["values"]] == [1.0, 2.0, 6.0, 24.0]


def test_moments_oracle_column(capsys):
    rc, out, _ = run_cli(
        ["moments", "--alpha", "1.5", "--t", "0.5", "--jmax", "2", "--oracle"], capsys
    )
    assert rc == 0
    doc = json.loads(out)
    assert len(doc["oracle_values"]) == 2 - (-3) + 1
    assert mpf(doc["oracle_max_rel"]) < mpf("1e-25")


def test_alpha_zero_rejected(capsys):
    rc, _, err = run_cli(["moments", "--alpha", "0"], capsys)
    assert rc == 2
    assert "alpha must be > 0" in err


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_det_requires_grids(capsys):
    rc, _, err = run_cli(["det", "--alpha", "1"], capsys)
    assert rc == 2
    assert "need" in err


def test_unsorted_t_grid_rejected(capsys):
    rc, _, err = run_cli(["det", "--t", "1,0.5", "--n", "2"], capsys)
    assert rc == 2
    assert "sorted" in err


def test_det_classical_row(capsys):
    rc, out, _ = run_cli(["det", "--alpha", "1", "--t", "0", "--n", "2"], capsys)
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("n,alpha,t,bits,lnD_n,H_n,H_n_prime")
    f = lines[1].split(",")
    assert f[0] == "2"
    assert abs(float(f[4]) - math.log(2)) < 1e-12
    assert f[5] == "" and f[6] == ""  # H columns empty at t = 0
    assert abs(float(f[8]) - 6.0) < 1e-12
    assert abs(float(f[9])) < 1e-20


def test_det_positive_t_fills_h_columns(capsys):
    rc, out, _ = run_cli(["det", "--alpha", "1", "--t", "0.5", "--n", "3"], capsys)
    assert rc == 0
    f = out.strip().split("\n")[1].split(",")
    assert f[5] != "" and f[6] != ""
    assert float(f[5]) != 0.0


def test_coeffs_beta_ladder(capsys):
    rc, out, _ = run_cli(["coeffs", "--alpha", "1", "--t", "0", "--n", "4"], capsys)
    assert rc == 0
    rows = [ln.split(",") for ln in out.strip().split("\n")[1:]]
    assert len(rows) == 4
    assert rows[0][8] == ""
    assert [float(r[8]) for r in rows[1:]] == [2.0, 6.0, 12.0]
    # alpha_k = 2k + alpha + 1, defined through degree n-2
    assert [float(r[7]) for r in rows[:3]] == [2.0, 4.0, 6.0]
    assert rows[3][7] == ""


def test_out_file_and_manifest(tmp_path, capsys):
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    base = ["coeffs", "--alpha", "1.5", "--t", "0.7", "--n", "5"]
    assert run_cli(base + ["--out", str(p1)], capsys)[0] == 0
    assert run_cli(base + ["--out", str(p2)], capsys)[0] == 0
    assert p1.read_bytes() == p2.read_bytes()
    man = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert set(man) == {"cells", "config", "version"}
    assert man["config"]["command"] == "coeffs"
    assert isinstance(man["cells"][0]["bits"], int)


def test_painleve_small_run_and_cache(tmp_path, capsys, monkeypatch):
    # private cache dir: the hit/miss assertions below need a cold start
    monkeypatch.setenv("HANKELP3_CACHE_DIR", str(tmp_path / "cache"))
    p1 = tmp_path / "p1.csv"
    p2 = tmp_path / "p2.csv"
    base = ["painleve", "--alpha", "1", "--s-max", "5", "--tol", "1e-12"]
    rc, out, _ = run_cli(base + ["--out", str(p1)], capsys)
    assert rc == 0
    assert "r(0+)" in out
    assert "tail_check SKIP" in out
    f = p1.read_text().strip().split("\n")[1].split(",")
    assert abs(float(f[7]) + 0.375) < 1e-11  # r(0+) = (1 - 4 alpha^2)/8
    assert f[13] == "SKIP"
    man1 = json.loads((tmp_path / "p1.csv.manifest.json").read_text())
    assert man1["cells"][0]["cache_hit"] is False

    rc, _, _ = run_cli(base + ["--out", str(p2)], capsys)
    assert rc == 0
    assert p1.read_bytes() == p2.read_bytes()
    man2 = json.loads((tmp_path / "p2.csv.manifest.json").read_text())
    assert man2["cells"][0]["cache_hit"] is True


def test_exit_code_3_on_precision_exhaustion(monkeypatch, capsys):
    def boom(*a, **k):
        raise PrecisionExhaustedError("bits budget exhausted at 4096")

    monkeypatch.setattr(cli, "build_system", boom)
    rc, _, err = run_cli(["det", "--alpha", "1", "--t", "0.5", "--n", "3"], capsys)
    assert rc == 3
    assert "exhausted" in err


def test_exit_code_4_reports_last_s(monkeypatch, capsys):
    def boom(*a, **k):
        raise StepCollapseError("step size collapsed at s = 2.5", last_s=2.5)

    monkeypatch.setattr(cli, "integrate", boom)
    rc, _, err = run_cli(["painleve", "--alpha", "1", "--s-max", "5"], capsys)
    assert rc == 4
    assert "2.5" in err


def test_exit_code_5_names_first_failure(monkeypatch, capsys):
    monkeypatch.setattr(cli, "sigma_form_residual", lambda *a, **k: mpf(1))
    rc, out, err = run_cli(
        ["verify", "--suite", "finite-n", "--alpha", "1", "--t", "0.4", "--n", "3"],
        capsys,
    )
    assert rc == 5
    assert "FAIL: sigma_form_residual" in err
    assert "sigma_form_residual: FAIL" in out


def test_verify_bad_suite(capsys):
    rc, _, err = run_cli(["verify", "--suite", "nope"], capsys)
    assert rc == 2
    assert "suite" in err


def test_verify_finite_n_passes(capsys):
    rc, out, _ = run_cli(
        ["verify", "--suite", "finite-n", "--alpha", "1", "--t", "0.4", "--n", "3"],
        capsys,
    )
    assert rc == 0
    assert "all assertions passed" in out
    assert "sigma_form_residual: PASS" in out
