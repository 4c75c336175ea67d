import csv
import hashlib
import json
import math

import numpy as np

from trajtherm import cli, linalg
from trajtherm.errors import StepSizeError
from trajtherm.scenarios import FluorescenceParams, fluorescence_fluxes

ARTIFACTS = ("trajectories.csv", "summary.json", "manifest.json")


def run_cli(tmp_path, name, *extra):
    out = tmp_path / name
    rc = cli.main(["--out", str(out), *extra])
    assert rc == 0
    return out


def test_monitor_run_is_deterministic(tmp_path):
    a = run_cli(tmp_path, "a", "--scenario", "monitor", "--n-traj", "200",
                "--steps", "40", "--seed", "11")
    b = run_cli(tmp_path, "b", "--scenario", "monitor", "--n-traj", "200",
                "--steps", "40", "--seed", "11")
    for fname in ARTIFACTS:
        assert (a / fname).read_bytes() == (b / fname).read_bytes()


def test_manifest_hashes_and_config_echo(tmp_path):
    out = run_cli(tmp_path, "m", "--scenario", "monitor", "--n-traj", "100",
                  "--steps", "20", "--seed", "3")
    manifest = json.loads((out / "manifest.json").read_text())
    for fname in ("trajectories.csv", "summary.json"):
        digest = hashlib.sha256((out / fname).read_bytes()).hexdigest()
        assert manifest["artifacts"][fname] == digest
    cfg = manifest["config"]
    assert cfg["scenario"] == "monitor"
    assert cfg["n_traj"] == 100
    assert cfg["steps"] == 20
    assert cfg["seed"] == 3
    assert "workers" not in cfg


def test_worker_count_does_not_change_artifacts(tmp_path):
    outs = []
    for name, workers in (("w1", "1"), ("w4", "4"), ("w8", "8")):
        outs.append(run_cli(tmp_path, name, "--scenario", "fluorescence",
                            "--n-traj", "300", "--steps", "200", "--seed", "5",
                            "--workers", workers))
    for fname in ARTIFACTS:
        ref = (outs[0] / fname).read_bytes()
        assert (outs[1] / fname).read_bytes() == ref
        assert (outs[2] / fname).read_bytes() == ref


def test_thermalize_summary_matches_relative_entropies(tmp_path):
    out = run_cli(tmp_path, "t", "--scenario", "thermalize")
    summary = json.loads((out / "summary.json").read_text())
    rho = 0.5 * np.array([[1.2, 0.5], [0.5, 0.8]], dtype=complex)
    h = 0.5 * np.diag([1.0, -1.0]).astype(complex)
    tau = linalg.thermal_state(h, 1.0)
    eta = np.diag(np.diag(rho))
    assert abs(summary["ift_value"] + summary["lambda_abs"] - 1.0) < 1e-10
    assert summary["lambda_abs"] == 0.0
    assert abs(summary["mean_Qq"]) < 1e-10
    assert abs(summary["mean_entropy_quantum"]
               - linalg.rel_entropy(rho, eta)) < 1e-10
    # classical part carries the finite-bath correction
    corr = summary["rel_entropy_env_final_env"]
    assert abs(summary["mean_entropy_classical"]
               - (linalg.rel_entropy(eta, tau) - corr)) <= corr + 1e-10
    assert abs(summary["mean_entropy"]
               - linalg.rel_entropy(rho, tau)) <= corr + 1e-10


def test_fluorescence_summary_flux_fields(tmp_path):
    out = run_cli(tmp_path, "f", "--scenario", "fluorescence",
                  "--n-traj", "2000", "--steps", "4000", "--seed", "1")
    summary = json.loads((out / "summary.json").read_text())
    p = FluorescenceParams(omega0=1.0, omega_l=1.0, g=0.5, gamma=1.0, nbar=0.3)
    w, qcl, qq = fluorescence_fluxes(p)
    assert abs(summary["flux_W"] - w) < 3 * summary["flux_W_se"]
    assert abs(summary["flux_Qcl"] - qcl) < 3 * summary["flux_Qcl_se"]
    assert abs(summary["flux_Qq"] - qq) < 3 * summary["flux_Qq_se"]
    assert summary["n_traj"] == 2000
    assert math.isfinite(summary["jarzynski"])


def test_csv_schema_and_ledger_closure(tmp_path):
    out = run_cli(tmp_path, "c", "--scenario", "fluorescence",
                  "--n-traj", "50", "--steps", "300", "--seed", "2")
    with open(out / "trajectories.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    assert header == ["traj_id", "k", "t", "outcome", "re_amp_0", "im_amp_0",
                      "re_amp_1", "im_amp_1", "dW", "dQcl", "dQq", "dis_step"]
    # default csv_traj = 4 ledgered trajectories, steps + init + final rows each
    ids = sorted({int(r[0]) for r in rows})
    assert ids == [0, 1, 2, 3]
    by_id = {}
    for r in rows:
        by_id.setdefault(int(r[0]), []).append(r)
    for tid, traj in by_id.items():
        assert len(traj) == 300 + 2
        # energy bookkeeping closes against the recorded amplitudes
        def energy(row):
            return 0.5 * ((float(row[4]) ** 2 + float(row[5]) ** 2)
                          - (float(row[6]) ** 2 + float(row[7]) ** 2))
        du = energy(traj[-1]) - energy(traj[0])
        total = sum(float(r[8]) + float(r[9]) + float(r[10]) for r in traj)
        assert abs(du - total) < 1e-9


def test_master_mode_matches_sampled_means(tmp_path):
    argv = ["--scenario", "fluorescence", "--n-traj", "4000",
            "--steps", "1000", "--seed", "7"]
    sampled = run_cli(tmp_path, "s", *argv)
    master = run_cli(tmp_path, "d", *argv, "--mode", "master")
    s = json.loads((sampled / "summary.json").read_text())
    m = json.loads((master / "summary.json").read_text())
    assert m["mode"] == "master"
    for key, se_key in (("mean_W", "W"), ("mean_Qcl", "Qcl"), ("mean_Qq", "Qq")):
        se = max(s["std_errors"][se_key], 1e-4)
        assert abs(s[key] - m[key]) < 4 * se
    with open(master / "trajectories.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        first = next(reader)
    assert first[3] == "master"
    # rho_ee + rho_gg traced correctly
    assert abs(float(first[4]) + float(first[5]) - 1.0) < 1e-10


def test_config_file_merge(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('scenario = "monitor"\nn_traj = 77\nseed = 9\nsteps = 25\n')
    out = run_cli(tmp_path, "cfg", "--config", str(cfg), "--steps", "30")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n_traj"] == 77
    assert manifest["config"]["steps"] == 30  # CLI overrides file
    assert manifest["config"]["seed"] == 9


def test_invalid_configuration_exits_2(tmp_path, capsys):
    assert cli.main(["--scenario", "monitor", "--mode", "enumerate",
                     "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["--out", str(tmp_path / "y")]) == 2  # no scenario at all
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"scenario": "fluorescence", "gamma": -1.0,
                               "seed": 1}))
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "z")]) == 2
    capsys.readouterr()


def test_numerical_guard_exits_3(tmp_path, monkeypatch, capsys):
    def boom(cfg, out_dir, workers=1):
        raise StepSizeError("integration step too large")

    monkeypatch.setattr(cli, "run", boom)
    rc = cli.main(["--scenario", "monitor", "--out", str(tmp_path / "g")])
    assert rc == 3
    assert "numerical guard" in capsys.readouterr().err
