import json
import os

import numpy as np
import pytest

from nlfront.cli import main
from nlfront.config import default_config, resolve_config
from nlfront.errors import ValidationError


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


BASE = {"problem": {"h0": 5.0},
        "solver": {"dx": 0.1, "dt": 0.05, "t_end": 2.0, "log_every": 0.5}}


def test_simulate_zero_horizon_single_row(tmp_path):
    cfg = write_cfg(tmp_path, {"problem": {"h0": 5.0},
                               "solver": {"dx": 0.1, "dt": 0.05, "t_end": 0.0}})
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "t,h,g,mass,sup_u,flux"
    assert len(rows) == 2
    assert (out / "resolved_config.json").exists()


def test_semiwave_reports_J1_failure(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE)
    rc = main(["semiwave", "--config", cfg, "--out", str(tmp_path / "sw"),
               "--set", 'problem.kernel={"family":"algebraic","gamma":1.5,"a":1.0}'])
    assert rc == 1
    assert "(J1)" in capsys.readouterr().err


def test_stability_override_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE)
    rc = main(["simulate", "--config", cfg, "--out", str(tmp_path / "x"),
               "--set", "solver.dt=1e9"])
    assert rc == 1
    assert "stability budget" in capsys.readouterr().err


def test_unknown_key_listed(tmp_path, capsys):
    rc = main(["simulate", "--out", str(tmp_path / "x"), "--set", "solver.dtt=0.1"])
    assert rc == 1
    assert "solver.dtt" in capsys.readouterr().err


def test_kernel_override_echoed(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "run"
    rc = main(["simulate", "--config", cfg, "--out", str(out), "--set",
               'problem.kernel={"family":"algebraic","gamma":2.5,"a":1.0}'])
    assert rc == 0
    echoed = json.loads((out / "resolved_config.json").read_text())
    assert echoed["problem"]["kernel"]["gamma"] == 2.5


def test_sweep_and_report(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "swp"
    rc = main(["sweep", "--config", cfg, "--out", str(out),
               "--set", 'sweep.command="semiwave"',
               "--set", "sweep.values=[0.5,1.0,2.0]",
               "--set", "semiwave.dx=0.05"])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    cs = [p["c0"] for p in summary["points"]]
    assert np.all(np.diff(cs) > 0.0)
    subdirs = [str(out / f"p{i:03d}") for i in range(3)]
    rep_out = tmp_path / "rep"
    assert main(["report", "--out", str(rep_out), *subdirs]) == 0
    assert (rep_out / "report.json").exists()


def test_report_refuses_missing_config(tmp_path, capsys):
    bare = tmp_path / "bare"
    bare.mkdir()
    rc = main(["report", "--out", str(tmp_path / "r"), str(bare)])
    assert rc == 1
    assert "resolved_config" in capsys.readouterr().err


def test_rerun_bit_identical(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_verify_command(tmp_path):
    cfg = write_cfg(tmp_path, {
        "problem": {"h0": 10.0, "d": 0.5,
                    "u0": {"type": "plateau", "m": 1.0, "ramp": 2.0}},
        "solver": {"dx": 0.05, "dt": 0.002, "t_end": 1.0, "log_every": 0.1},
        "verify": {"checks": ["mass-flux", "comparison"]},
    })
    out = tmp_path / "ver"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "verify.json").read_text())
    assert payload["passed"]
    assert payload["mass_flux"]["residual"] <= 1e-3


def test_resource_cap_exit_2_with_partial_artifact(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"problem": {"h0": 10.0},
                               "solver": {"dx": 0.05, "dt": 0.05, "t_end": 40.0,
                                          "log_every": 1.0, "max_nodes": 300}})
    out = tmp_path / "capped"
    rc = main(["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 2
    assert "window cap" in capsys.readouterr().err
    partial = (out / "trajectory_partial.csv").read_text().splitlines()
    assert partial[0] == "t,h,g,mass,sup_u,flux"
    assert len(partial) > 2


def test_resolve_config_defaults_and_validation(tmp_path):
    scenario = resolve_config(None, [])
    assert scenario.raw["problem"]["variant"] == "halfline-fb"
    with pytest.raises(ValidationError):
        resolve_config(None, ["problem.variant=oops"])
    cfg = write_cfg(tmp_path, {"made_up_section": {}})
    with pytest.raises(ValidationError):
        resolve_config(cfg, [])


def test_rates_command(tmp_path):
    cfg = write_cfg(tmp_path, {
        "problem": {"h0": 10.0},
        "solver": {"dx": 0.1, "dt": 0.05, "t_end": 30.0, "log_every": 0.5},
        "analysis": {"fits": ["linear"], "drift_check": False},
    })
    out = tmp_path / "rates"
    assert main(["rates", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "rates.json").read_text())
    assert payload["linear"]["coeffs"]["c"] > 0.0
