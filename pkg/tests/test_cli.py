import json
import subprocess
import sys

import numpy as np
import pytest

CONFIG = {
    "geometry": {"num_sensors": 8, "spacing_ratio": 0.5},
    "calibration": {"num_coeffs": 1},
    "grid": {"start_deg": -24.0, "stop_deg": 24.0, "step_deg": 6.0},
    "scene": {"true_doas_deg": [7.5], "num_snapshots": 4},
    "experiment": {"snr_db_list": [15.0], "trials_per_snr": 1,
                   "method": ["proposed"], "seed": 3},
    "eta_rule": {"rule": "quantile", "confidence": 0.95},
}


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "liftdoa.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(CONFIG))
    return path


def test_simulate_then_solve_round_trip(tmp_path, config_path):
    out = tmp_path / "scn"
    rc = run_cli("simulate", "--config", str(config_path), "--out", str(out))
    assert rc.returncode == 0, rc.stderr
    scn = out / "scenario.npz"
    data = np.load(scn)
    assert data["observations"].shape == (8, 4)
    assert data["sbar"].shape == (8, 4)  # N=8 grid

    est = tmp_path / "est"
    rc = run_cli("solve", "--config", str(config_path), "--scenario", str(scn),
                 "--out", str(est), "--dump-program", "--solver-log", "--no-plots")
    assert rc.returncode == 0, rc.stderr
    payload = json.loads((est / "estimate.json").read_text())
    assert payload["solver_status"] == "optimal"
    assert abs(payload["theta_hat_deg"][0] - 7.5) < 3.0
    assert (est / "spectrum.csv").exists()
    assert (est / "solver_log.csv").exists()

    from liftdoa.program import load_program
    from liftdoa.solver import solve
    prog = load_program(est / "program.socp")
    assert solve(prog).status == "optimal"


def test_resolve_writes_figure_and_estimate(tmp_path, config_path):
    out = tmp_path / "res"
    rc = run_cli("resolve", "--config", str(config_path), "--out", str(out))
    assert rc.returncode == 0, rc.stderr
    assert (out / "spectrum.csv").exists()
    assert (out / "spectrum.png").exists()
    payload = json.loads((out / "estimate.json").read_text())
    assert payload["method"] == "proposed"


def test_sweep_outputs_and_seed_override(tmp_path, config_path):
    out1 = tmp_path / "s1"
    rc = run_cli("sweep", "--config", str(config_path), "--out", str(out1),
                 "--no-plots", "--timings")
    assert rc.returncode == 0, rc.stderr
    assert (out1 / "trials.csv").exists()
    assert (out1 / "summary.json").exists()
    assert (out1 / "timings.csv").exists()
    out2 = tmp_path / "s2"
    rc = run_cli("sweep", "--config", str(config_path), "--out", str(out2),
                 "--no-plots", "--seed", "99")
    assert rc.returncode == 0, rc.stderr
    assert (out1 / "trials.csv").read_bytes() != (out2 / "trials.csv").read_bytes()


def test_method_override(tmp_path, config_path):
    out = tmp_path / "m"
    rc = run_cli("resolve", "--config", str(config_path), "--out", str(out),
                 "--method", "ongrid-ablation", "--no-plots")
    assert rc.returncode == 0, rc.stderr
    payload = json.loads((out / "estimate.json").read_text())
    assert payload["method"] == "ongrid-ablation"


def test_invalid_config_reports_field(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"geometry": {"num_antennas": 8}}))
    rc = run_cli("resolve", "--config", str(bad), "--out", str(tmp_path / "x"))
    assert rc.returncode != 0
    assert "geometry.num_antennas" in rc.stderr
