import os

import numpy as np
import pytest

from translator_lab import cli
from translator_lab.errors import ConfigError

FLOW_1D = ["--set", 'domain="interval"', "--set", "lo=-1", "--set", "hi=1", "--set", "w=1"]


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_defaults_filled():
    cfg = cli.parse_config("flow-run", overrides=['domain="interval"', "lo=-1", "hi=1", "w=1"])
    assert cfg.params["h"] == 0.01 and cfg.params["sigma"] == 0.5 and cfg.params["tol_steady"] == 1e-8
    assert cfg.out == "out"


def test_toml_file_and_override(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('domain = "disc"\ncenter = [0.0, 0.0]\nradius = 0.4\nw = [1.0]\nh = 0.05\n')
    cfg = cli.parse_config("flow-run", str(p), ["h=0.025"])
    assert cfg.params["h"] == 0.025 and cfg.params["radius"] == 0.4


@pytest.mark.parametrize("override,key", [
    ("sigma=1.5", "sigma"), ("h=-1", "h"), ("bogus=3", "bogus"), ("record_every=2.5", "record_every"),
    ('psi="cubic"', "psi"),
])
def test_bad_flow_keys(override, key, capsys, tmp_path):
    code, _, err = run(["flow-run", "--out", str(tmp_path)] + FLOW_1D + ["--set", override], capsys)
    assert code == 2 and key in err


def test_missing_key(capsys):
    code, _, err = run(["flow-run", "--set", 'domain="interval"', "--set", "lo=-1", "--set", "hi=1"], capsys)
    assert code == 2 and "w:" in err


def test_theta_out_of_range(capsys):
    code, _, err = run(["soliton-verify", "--set", 'model="tilted_grim_reaper"', "--set", "theta=2.0"], capsys)
    assert code == 2 and "theta" in err
    with pytest.raises(ConfigError) as info:
        cli.parse_config("spectrum", overrides=['model="tilted_grim_reaper"', "theta=2.0"])
    assert info.value.key == "theta"


def test_unreadable_config(capsys, tmp_path):
    code, _, err = run(["flow-check", "--config", str(tmp_path / "none.toml")], capsys)
    assert code == 2 and "config" in err


def test_bad_command(capsys):
    assert cli.main(["nonsense"]) == 2


def test_soliton_verify_ok(capsys, tmp_path):
    code, out, _ = run(["soliton-verify", "--set", 'model="grim_reaper"', "--out", str(tmp_path)], capsys)
    assert code == 0 and "verified" in out
    vals = [float(l.split("max ")[1].split()[0]) for l in out.splitlines() if "max " in l]
    assert vals and max(vals) <= 1e-10
    assert (tmp_path / "soliton_verify.txt").exists()


def test_soliton_verify_fail(capsys, tmp_path):
    code, out, _ = run(["soliton-verify", "--set", 'model="parabola"', "--out", str(tmp_path)], capsys)
    assert code == 1 and "verification failed" in out


def test_flow_check(capsys, tmp_path):
    code, out, _ = run(["flow-check", "--set", 'domain="disc"', "--set", "center=[0,0]",
                        "--set", "radius=0.1", "--out", str(tmp_path)], capsys)
    assert code == 0 and "value = 1.6" in out and "condition not satisfied" in out


def test_flow_run_and_exports(capsys, tmp_path):
    code, out, _ = run(["flow-run", "--out", str(tmp_path), "--set", "h=0.05", "--set", "T_max=0.5"] + FLOW_1D,
                       capsys)
    assert code == 0 and "status = t_max" in out
    with open(tmp_path / "diagnostics.csv") as fh:
        assert fh.readline().strip() == "t,sup_f,sup_fbar,sup_bdry_grad,steady_res,area,dissipation,barrier_margin"
    assert (tmp_path / "field.csv").exists()


def test_flow_run_2d_vtk(capsys, tmp_path):
    code, _, _ = run(["flow-run", "--out", str(tmp_path), "--set", 'domain="disc"', "--set", "center=[0,0]",
                      "--set", "radius=0.4", "--set", "w=1", "--set", "h=0.05", "--set", "T_max=0.1"], capsys)
    assert code == 0 and (tmp_path / "field.vtk").exists()


def test_flow_blowup_exit(capsys, tmp_path):
    # 100 x CFL for h = 0.05, n = 1: 100 * 0.05^2 / 4
    code, _, err = run(["flow-run", "--out", str(tmp_path), "--set", "h=0.05", "--set", "dt=0.0625"] + FLOW_1D,
                       capsys)
    assert code == 3 and "blow-up" in err


def test_flow_violation_exit(capsys, tmp_path, monkeypatch):
    from translator_lab.errors import MonitorViolation

    def boom(*a, **k):
        raise MonitorViolation("forced")

    monkeypatch.setattr(cli.flow, "run", boom)
    code, _, err = run(["flow-run", "--out", str(tmp_path), "--set", "h=0.05"] + FLOW_1D, capsys)
    assert code == 1 and "monitor violation" in err


def test_unwritable_output(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(["soliton-verify", "--set", 'model="grim_reaper"', "--out", str(blocker / "sub")], capsys)
    assert code == 2 and "output" in err


def test_spectrum(capsys, tmp_path):
    code, out, _ = run(["spectrum", "--out", str(tmp_path), "--set", 'model="grim_reaper"', "--set", "box_lo=-1",
                        "--set", "box_hi=1", "--set", "a=[1, 2]"], capsys)
    assert code == 0 and "a = 1: sup_value" in out
    with open(tmp_path / "spectrum.csv") as fh:
        assert fh.readline().strip() == "a,sup_value,lambda1"


def test_volume_growth_cli(capsys, tmp_path):
    code, _, _ = run(["volume-growth", "--out", str(tmp_path), "--set", 'model="hyperplane"', "--set", "a=2",
                      "--set", "R0=1", "--set", "R1=4"], capsys)
    assert code == 0
    with open(tmp_path / "growth.csv") as fh:
        assert fh.readline().strip() == "R,f_R,ratio"
    code, _, err = run(["volume-growth", "--out", str(tmp_path), "--set", 'model="grim_reaper"', "--set", "a=2",
                        "--set", "R0=1", "--set", "R1=3"], capsys)
    assert code == 2 and "a:" in err


def test_identity_suite(capsys, tmp_path):
    code, out, _ = run(["identity-suite", "--out", str(tmp_path), "--set", 'model="grim_reaper"'], capsys)
    assert code == 0 and "divergence_identity" in out


def test_threads_env(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("TRANSLATOR_LAB_THREADS", "1")
    assert cli.main(["soliton-verify", "--set", 'model="grim_reaper"', "--out", str(tmp_path)]) == 0
    monkeypatch.setenv("TRANSLATOR_LAB_THREADS", "zero")
    code, _, err = run(["soliton-verify", "--set", 'model="grim_reaper"', "--out", str(tmp_path)], capsys)
    assert code == 2 and "TRANSLATOR_LAB_THREADS" in err


def test_byte_identical_outputs(capsys, tmp_path):
    args = ["--set", "h=0.05", "--set", "T_max=0.3"] + FLOW_1D
    for d in ("a", "b"):
        assert cli.main(["flow-run", "--out", str(tmp_path / d)] + args) == 0
    capsys.readouterr()
    for name in ("diagnostics.csv", "field.csv", "flow_summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
