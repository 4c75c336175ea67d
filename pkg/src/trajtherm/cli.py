"""Batch front-end: run a named scenario and write CSV/JSON artifacts.

Usage::

    trajtherm --scenario fluorescence --n-traj 2000 --seed 7 --out results/

Artifacts written to the output directory:

* ``trajectories.csv``: per-step ledger rows (fixed schema: traj_id, k, t,
  outcome, re_amp_0, im_amp_0, ..., dW, dQcl, dQq, dis_step). Sampled
  scenarios record the first ``csv_traj`` trajectories; enumerate mode
  records every path.
* ``summary.json``: the ensemble summary (mean_W, mean_Qcl, mean_Qq,
  mean_entropy, ift_value, lambda_abs, std_errors, n_traj, seed).
* ``manifest.json``: the fully resolved configuration plus package version
  and artifact hashes. Identical configuration and seed give byte-identical
  files regardless of worker count.

Exit codes: 0 success, 2 invalid configuration, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__, scenarios
from .errors import (
    ParameterError,
    StepSizeError,
    TrajthermError,
    UnitarityError,
)
from .trajectories import csv_header, format_row

PRESETS = {
    "thermalize": {
        "scenario": "thermalize",
        "mode": "enumerate",
        "omega0": 1.0,
        "temperature": 1.0,
        "theta": math.pi / 2,
        "bloch": [0.5, 0.0, 0.2],
        "n_traj": 0,
        "steps": 1,
        "dt": 1.0,
        "seed": 0,
    },
    "fluorescence": {
        "scenario": "fluorescence",
        "mode": "sample",
        "omega0": 1.0,
        "omega_l": 1.0,
        "g": 0.5,
        "gamma": 1.0,
        "nbar": 0.3,
        "initial": "thermal",
        "transient": 4.0,
        "n_traj": 2000,
        "steps": 4000,
        "dt": 0.002,
        "seed": 1,
        "csv_traj": 4,
    },
    "monitor": {
        "scenario": "monitor",
        "mode": "sample",
        "omega0": 1.0,
        "gamma_m": 1.0,
        "n_traj": 2000,
        "steps": 500,
        "dt": 0.002,
        "seed": 1,
        "csv_traj": 4,
    },
}

_GUARD_ERRORS = (StepSizeError, UnitarityError)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="trajtherm",
        description="Trajectory thermodynamics scenario runner.",
    )
    ap.add_argument("--scenario", choices=sorted(PRESETS))
    ap.add_argument("--config", type=Path, help="TOML or JSON config file")
    ap.add_argument("--n-traj", type=int, dest="n_traj")
    ap.add_argument("--steps", type=int)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--mode", choices=["sample", "enumerate", "master"])
    ap.add_argument("--out", type=Path, default=Path("."))
    ap.add_argument("--workers", type=int, default=1)
    return ap


def load_config(args: argparse.Namespace) -> dict:
    """Merge preset, config file, and command-line overrides."""
    cfg = {}
    if args.config is not None:
        raw = Path(args.config).read_bytes()
        if args.config.suffix == ".json":
            cfg = json.loads(raw)
        else:
            cfg = tomllib.loads(raw.decode())
    scenario = args.scenario or cfg.get("scenario")
    if scenario not in PRESETS:
        raise ParameterError(f"unknown or missing scenario: {scenario!r}")
    merged = dict(PRESETS[scenario])
    merged.update(cfg)
    merged["scenario"] = scenario
    for key in ("n_traj", "steps", "dt", "seed", "mode"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    validate_config(merged)
    return merged


def validate_config(cfg: dict) -> None:
    mode = cfg.get("mode")
    if mode not in ("sample", "enumerate", "master"):
        raise ParameterError(f"invalid mode: {mode!r}")
    if cfg["scenario"] in ("fluorescence", "monitor"):
        if mode == "enumerate":
            raise ParameterError(
                "enumerate mode is only available for discrete-outcome scenarios"
            )
        if mode == "sample" and cfg.get("seed") is None:
            raise ParameterError("sample mode requires a seed")
        if cfg["n_traj"] <= 0 or cfg["steps"] <= 0 or cfg["dt"] <= 0:
            raise ParameterError("need n_traj > 0, steps > 0, dt > 0")
    if cfg["scenario"] == "thermalize" and mode == "sample":
        raise ParameterError("thermalize supports enumerate mode only")


def _bloch_state(r) -> np.ndarray:
    x, y, z = (float(c) for c in r)
    if x * x + y * y + z * z > 1.0 + 1e-12:
        raise ParameterError("Bloch vector lies outside the unit ball")
    return 0.5 * (
        np.eye(2, dtype=complex)
        + x * np.array([[0, 1], [1, 0]])
        + y * np.array([[0, -1j], [1j, 0]])
        + z * scenarios.SIGMA_Z
    )


def run(cfg: dict, out_dir: Path, workers: int = 1) -> None:
    """Execute the configured scenario and write the three artifacts."""
    scenario = cfg["scenario"]
    if scenario == "thermalize":
        h_s = 0.5 * cfg["omega0"] * scenarios.SIGMA_Z
        result = scenarios.enumerate_thermalization(
            _bloch_state(cfg["bloch"]), h_s, cfg["temperature"], theta=cfg["theta"]
        )
        summary = result.summary(seed=cfg["seed"])
        rows = _thermalize_rows(result)
    elif scenario == "fluorescence":
        params = scenarios.FluorescenceParams(
            omega0=cfg["omega0"],
            omega_l=cfg["omega_l"],
            g=cfg["g"],
            gamma=cfg["gamma"],
            nbar=cfg["nbar"],
        )
        if cfg["mode"] == "master":
            summary, rows = _master_fluorescence(params, cfg)
            _write_artifacts(cfg, out_dir, summary, rows)
            return
        run_res = scenarios.run_fluorescence(
            params,
            n_traj=cfg["n_traj"],
            t_final=cfg["steps"] * cfg["dt"],
            dt=cfg["dt"],
            seed=cfg["seed"],
            transient=cfg["transient"],
            workers=workers,
            initial=cfg["initial"],
            ledger_upto=min(cfg["csv_traj"], cfg["n_traj"]),
        )
        summary = run_res.summary()
        rows = run_res.ledger_rows
    else:
        params = scenarios.MonitorParams(
            omega0=cfg["omega0"], gamma_m=cfg["gamma_m"], dt=cfg["dt"]
        )
        if cfg["mode"] == "master":
            summary, rows = _master_monitor(params, cfg)
            _write_artifacts(cfg, out_dir, summary, rows)
            return
        run_res = scenarios.run_monitoring(
            params,
            n_traj=cfg["n_traj"],
            steps=cfg["steps"],
            seed=cfg["seed"],
            workers=workers,
            ledger_upto=min(cfg["csv_traj"], cfg["n_traj"]),
        )
        summary = run_res.summary()
        rows = run_res.ledger_rows

    _write_artifacts(cfg, out_dir, summary, rows)


def _write_artifacts(cfg: dict, out_dir: Path, summary, rows) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectories.csv"
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(",".join(csv_header(2)) + "\n")
        for r in rows:
            fh.write(",".join(format_row(r)) + "\n")
    summary_text = summary.to_json()
    (out_dir / "summary.json").write_text(summary_text + "\n")

    manifest = {
        "version": __version__,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "artifacts": {
            "trajectories.csv": _sha256(csv_path),
            "summary.json": hashlib.sha256(
                (summary_text + "\n").encode()
            ).hexdigest(),
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _master_fluorescence(params, cfg):
    """Deterministic ensemble-level run: RK4 master solution with the
    averaged work and classical-heat rates; quantum heat is the residual.
    CSV density-matrix encoding: re_amp_0 = rho_ee, im_amp_0 = rho_gg,
    re_amp_1/im_amp_1 = Re/Im rho_eg."""
    from .thermo import EnsembleSummary
    from .unravel import evolve_master

    dt = cfg["dt"]
    steps = cfg["steps"]
    model = scenarios.fluorescence_model(params, dt)
    pe_init, _ = (
        params.thermal_populations() if cfg["initial"] == "thermal" else (0.0, 1.0)
    )
    rho0 = np.diag([pe_init, 1.0 - pe_init]).astype(complex)
    grid = np.arange(steps + 1) * dt
    sol = evolve_master(rho0, model, grid)
    gm = params.gamma * (params.nbar + 1.0)
    gp = params.gamma * params.nbar
    rows = []
    w = qcl = 0.0
    u0 = 0.5 * params.omega0 * np.real(rho0[0, 0] - rho0[1, 1])
    u_prev = u0
    for k in range(steps + 1):
        rho = sol[k]
        if k > 0:
            rows.append([
                0, k, k * dt, "master",
                float(np.real(rho[0, 0])), float(np.real(rho[1, 1])),
                float(np.real(rho[0, 1])), float(np.imag(rho[0, 1])),
                dw_k, dqcl_k, dqq_k, math.nan,
            ])
        if k == steps:
            break
        rho_mid = sol[k]
        t = k * dt
        s_rot = rho_mid[0, 1] * np.exp(1j * params.omega_l * t)
        dw_k = float(-params.g * params.omega_l * dt * np.imag(s_rot))
        dqcl_k = float(
            params.omega0 * dt * (gp * np.real(rho_mid[1, 1]) - gm * np.real(rho_mid[0, 0]))
        )
        u_now = 0.5 * params.omega0 * float(np.real(sol[k + 1][0, 0] - sol[k + 1][1, 1]))
        dqq_k = (u_now - u_prev) - dw_k - dqcl_k
        w += dw_k
        qcl += dqcl_k
        u_prev = u_now
    du = u_prev - u0
    summary = EnsembleSummary(
        mean_w=w, mean_qcl=qcl, mean_qq=du - w - qcl,
        mean_entropy=math.nan, ift_value=math.nan, lambda_abs=0.0,
        std_errors={}, n_traj=0, seed=cfg["seed"],
        extra={"mode": "master"},
    )
    return summary, rows


def _master_monitor(params, cfg):
    """Deterministic dephasing evolution (same CSV encoding as above).
    Work and classical heat vanish; the average quantum heat is zero because
    the populations are conserved."""
    from .thermo import EnsembleSummary
    from .unravel import evolve_master

    steps = cfg["steps"]
    model = scenarios.monitor_model(params)
    rho0 = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    grid = np.arange(steps + 1) * params.dt
    sol = evolve_master(rho0, model, grid)
    rows = []
    for k in range(1, steps + 1):
        rho = sol[k]
        rows.append([
            0, k, k * params.dt, "master",
            float(np.real(rho[0, 0])), float(np.real(rho[1, 1])),
            float(np.real(rho[0, 1])), float(np.imag(rho[0, 1])),
            0.0, 0.0, 0.0, math.nan,
        ])
    summary = EnsembleSummary(
        mean_w=0.0, mean_qcl=0.0, mean_qq=0.0,
        mean_entropy=math.nan, ift_value=math.nan, lambda_abs=0.0,
        std_errors={}, n_traj=0, seed=cfg["seed"],
        extra={"mode": "master"},
    )
    return summary, rows


def _thermalize_rows(result) -> list:
    """One CSV block per enumerated path: initial split, channel, final."""
    rows = []
    for tid, path in enumerate(result.paths):
        l, m, n, mu, nu = path.labels
        dis_q = path.dis_q if path.p_fwd > 0 else math.nan
        dis_cl = path.dis_cl if path.p_fwd > 0 else math.nan
        rows.append([tid, 0, 0.0, f"init:{l}", path.p_fwd, 0.0, path.p_rev, 0.0,
                     0.0, 0.0, 0.0, 0.0])
        rows.append([tid, 1, 0.0, f"energy:{m}", 0.0, 0.0, 0.0, 0.0,
                     0.0, 0.0, path.q_quantum, dis_q])
        rows.append([tid, 2, 1.0, f"env:{mu}|{nu}|final:{n}", 0.0, 0.0, 0.0, 0.0,
                     0.0, path.q_classical, 0.0, dis_cl])
    return rows


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ParameterError, OSError, ValueError) as exc:
        print(f"trajtherm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        run(cfg, args.out, workers=args.workers)
    except _GUARD_ERRORS as exc:
        print(f"trajtherm: numerical guard tripped: {exc}", file=sys.stderr)
        return 3
    except ParameterError as exc:
        print(f"trajtherm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except TrajthermError as exc:
        print(f"trajtherm: numerical guard tripped: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
