"""Command-line interface: config plumbing, exit codes, output contracts."""

import json
import subprocess
import sys

import numpy as np
import pytest

from sublevel_kit.cli import (
    DEFAULT_BUDGET,
    RunConfig,
    build_config,
    main,
    parse_levels,
    read_config_file,
)
from sublevel_kit.errors import ParameterError


# -- config plumbing ----------------------------------------------------------

def test_parse_levels_linear():
    np.testing.assert_allclose(parse_levels("0.5:1.5:21"),
                               np.linspace(0.5, 1.5, 21))


def test_parse_levels_log():
    got = parse_levels("log:0.01:0.1:15")
    np.testing.assert_allclose(got, np.geomspace(0.01, 0.1, 15))


def test_parse_levels_list():
    np.testing.assert_allclose(parse_levels("0.5,1.0,1.5"),
                               [0.5, 1.0, 1.5])


@pytest.mark.parametrize("bad", ["", "1:0.5:5", "log:0:1:5", "a,b", "1:2",
                                 "log:0.1:0.01:5"])
def test_parse_levels_malformed(bad):
    with pytest.raises(ValueError):
        parse_levels(bad)


def test_resolution_from_budget():
    cfg = RunConfig(command="volume", budget=DEFAULT_BUDGET)
    assert cfg.resolution(2) == 512          # capped
    assert cfg.resolution(3) == 256          # 2^24 exactly
    assert cfg.resolution(4) == 64
    tiny = RunConfig(command="volume", budget=100)
    assert tiny.resolution(2) == 32          # floored
    with pytest.raises(ParameterError):
        RunConfig(command="volume", budget=0).resolution(2)
    with pytest.raises(ParameterError):
        _ = RunConfig(command="volume", budget=-5).samples


def test_build_config_seed_env(monkeypatch):
    monkeypatch.setenv("SUBLEVEL_KIT_SEED", "42")
    cfg = build_config(["volume", "euclidean_norm:2"])
    assert cfg.seed == 42
    cfg = build_config(["volume", "euclidean_norm:2", "--seed", "7"])
    assert cfg.seed == 7                     # flag beats the environment


def test_build_config_file_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("budget = 20000   # comment\nseed=3\nformat=csv\n")
    cfg = build_config(["volume", "euclidean_norm:2",
                        "--config", str(cfg_file), "--seed", "7"])
    assert cfg.budget == 20000               # from file
    assert cfg.seed == 7                     # flag beats file
    assert cfg.format == "csv"


def test_read_config_file_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("just a line without equals\n")
    with pytest.raises(ValueError):
        read_config_file(bad)
    assert main(["volume", "euclidean_norm:2", "--config", str(bad)]) == 2


def test_report_filter_lands_in_config():
    cfg = build_config(["report", "quartic"])
    assert cfg.command == "report"
    assert cfg.filter == "quartic"
    assert cfg.field_id is None


# -- exit codes ---------------------------------------------------------------

def test_unknown_field_exits_2(capsys):
    assert main(["volume", "unknown:9"]) == 2
    assert "unknown" in capsys.readouterr().err


def test_missing_field_exits_2():
    assert main(["area"]) == 2


def test_bad_levels_exit_2():
    assert main(["volume", "euclidean_norm:2", "--levels", "nope"]) == 2


def test_out_of_range_level_exits_2():
    assert main(["area", "euclidean_norm:2", "--levels", "5.0,6.0"]) == 2


def test_zero_budget_exits_2():
    assert main(["volume", "euclidean_norm:2", "--budget", "0"]) == 2


def test_bad_command_exits_2_via_argparse():
    proc = subprocess.run(
        [sys.executable, "-m", "sublevel_kit.cli", "frobnicate"],
        capture_output=True, text=True)
    assert proc.returncode == 2


def test_help_exits_0():
    proc = subprocess.run(
        [sys.executable, "-m", "sublevel_kit.cli", "--help"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sublevel-kit" in proc.stdout


def test_console_script_installed():
    proc = subprocess.run(
        ["sublevel-kit", "volume", "euclidean_norm:2",
         "--levels", "0.5:1.5:5", "--budget", "4096"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "volume euclidean_norm:2" in proc.stdout


# -- computations and checks --------------------------------------------------

def test_volume_command_writes_outputs(tmp_path, capsys):
    out = tmp_path / "vol"
    code = main(["volume", "euclidean_norm:2", "--levels", "0.5:1.5:5",
                 "--budget", "16384", "--out", str(out)])
    assert code == 0
    lines = (tmp_path / "vol.csv").read_text().splitlines()
    assert lines[0] == "t,V,V_err,dVdt,dVdt_err"
    payload = json.loads((tmp_path / "vol.json").read_text())
    assert payload["field"] == "euclidean_norm:2"
    assert len(payload["V"]) == 5
    # V(1) = pi
    assert payload["V"][2] == pytest.approx(np.pi, rel=0.01)


def test_area_and_glint_commands(tmp_path):
    out = tmp_path / "a"
    assert main(["area", "squared_norm:2", "--levels", "1.0",
                 "--budget", "16384", "--out", str(out),
                 "--format", "csv"]) == 0
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "t,A,A_err,method"
    t, a_val, _, method = lines[1].split(",")
    assert float(a_val) == pytest.approx(2.0 * np.pi, rel=0.01)
    assert method == "mesh"

    out2 = tmp_path / "j"
    assert main(["glint", "squared_norm:2", "--levels", "1.0",
                 "--budget", "16384", "--out", str(out2),
                 "--format", "csv"]) == 0
    lines = (tmp_path / "j.csv").read_text().splitlines()
    assert lines[0] == "t,J,J_err,method,density"
    assert float(lines[1].split(",")[1]) == pytest.approx(np.pi, rel=0.01)


def test_check_main_csv_contract(tmp_path, capsys):
    out = tmp_path / "main"
    code = main(["check-main", "squared_norm:2", "--levels", "0.8:1.2:3",
                 "--budget", "16384", "--out", str(out)])
    assert code == 0
    assert "-> pass" in capsys.readouterr().out
    lines = (tmp_path / "main.csv").read_text().splitlines()
    assert lines[0] == "t,Vprime,A,grad_norm_xi,residual"
    assert len(lines) == 4
    row = lines[2].split(",")            # t = 1: V' = pi, A = 2 pi, |g| = 2
    assert float(row[1]) == pytest.approx(np.pi, rel=0.02)
    assert float(row[2]) == pytest.approx(2.0 * np.pi, rel=0.02)
    assert float(row[3]) == pytest.approx(2.0, rel=0.01)
    payload = json.loads((tmp_path / "main.json").read_text())
    assert payload["passed"] is True


def test_check_main_fails_at_starved_budget(capsys):
    """res 32 in 3d is too coarse for the 3% tolerance: exit 1, FAIL line."""
    code = main(["check-main", "euclidean_norm:3", "--levels", "0.8:1.2:3",
                 "--budget", "32768"])
    assert code == 1
    assert "-> FAIL" in capsys.readouterr().out


def test_check_coarea_command(capsys):
    code = main(["check-coarea", "squared_norm:2", "--levels", "0.5:1.5:9",
                 "--budget", "400000"])
    assert code == 0
    assert "-> pass" in capsys.readouterr().out


def test_check_piecewise_and_dilation(capsys):
    assert main(["check-piecewise", "weighted_l1:2", "--levels", "0.6:1.4:3",
                 "--budget", "65536"]) == 0
    assert main(["check-dilation", "weighted_l1:2", "--budget", "65536"]) == 0
    # non-unit weights are a configuration error for the dilation identity
    assert main(["check-dilation", "weighted_l1:2:1,1",
                 "--budget", "65536"]) == 2


def test_loja_fit_json(tmp_path, capsys):
    out = tmp_path / "fit"
    code = main(["loja-fit", "squared_norm:2",
                 "--levels", "log:0.01:0.1:15", "--budget", "65536",
                 "--out", str(out), "--format", "json"])
    assert code == 0
    assert "nu = 0.5" in capsys.readouterr().out
    payload = json.loads((tmp_path / "fit.json").read_text())
    assert payload["nu"] == pytest.approx(0.5, abs=1e-6)
    assert payload["oracle_nu"] == 0.5
    assert {"nu", "C", "residual", "oracle_nu", "levels",
            "tightness"} <= set(payload)


# -- report battery -----------------------------------------------------------

def test_report_empty_filter_exits_0(capsys):
    assert main(["report", "zzz"]) == 0
    assert "report: 0 row(s)" in capsys.readouterr().out


def test_report_zero_budget_records_failures(tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(["report", "quartic", "--budget", "0", "--out", str(out)])
    assert code == 1
    lines = (tmp_path / "rep.csv").read_text().splitlines()
    assert lines[0] == "field,check,discrepancy,tolerance,status,note"
    body = [ln.split(",") for ln in lines[1:]]
    assert len(body) == 4                    # quartic battery: 4 checks
    assert all(row[4] == "fail" for row in body)
    assert all(row[5] == "ParameterError" for row in body)


def test_report_runs_are_byte_identical(tmp_path):
    args = ["report", "quartic", "--budget", "65536", "--seed", "5"]
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        assert main(args + ["--out", str(out)]) == 0
        outs.append((out.with_suffix(".csv").read_bytes(),
                     out.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]
    rows = outs[0][0].decode().splitlines()[1:]
    assert len(rows) == 4
    assert all(row.split(",")[4] == "pass" for row in rows)
