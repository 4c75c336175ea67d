"""Per-trajectory first-law ledger and stochastic entropy production.

Quantum heat is always stored as the residual dU - dW - dQ_cl, so the first
law closes exactly by construction; closed-form expressions for specific
models are cross-checks, not the ledger source.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg


@dataclass
class EnergyLedger:
    """Internal-energy series and work/heat increments along one trajectory."""

    u_series: list = field(default_factory=list)
    dw: list = field(default_factory=list)
    dqcl: list = field(default_factory=list)
    dqq: list = field(default_factory=list)

    def add_step(self, u_post: float, dw: float, dqcl: float) -> float:
        """Append a step; quantum heat is the closure residual."""
        u_pre = self.u_series[-1]
        dqq = (u_post - u_pre) - dw - dqcl
        self.u_series.append(u_post)
        self.dw.append(dw)
        self.dqcl.append(dqcl)
        self.dqq.append(dqq)
        return dqq

    def totals(self) -> tuple[float, float, float, float]:
        """(dU, W, Qcl, Qq) with Qq the trajectory-level residual."""
        du = self.u_series[-1] - self.u_series[0]
        w = math.fsum(self.dw)
        qcl = math.fsum(self.dqcl)
        return du, w, qcl, du - w - qcl


@dataclass
class EnsembleSummary:
    mean_w: float
    mean_qcl: float
    mean_qq: float
    mean_entropy: float
    ift_value: float
    lambda_abs: float
    std_errors: dict
    n_traj: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "mean_W": self.mean_w,
            "mean_Qcl": self.mean_qcl,
            "mean_Qq": self.mean_qq,
            "mean_entropy": self.mean_entropy,
            "ift_value": self.ift_value,
            "lambda_abs": self.lambda_abs,
            "std_errors": self.std_errors,
            "n_traj": self.n_traj,
            "seed": self.seed,
        }
        payload.update(self.extra)
        return json.dumps(payload, sort_keys=True, indent=2)


def internal_energy(psi: np.ndarray, h: np.ndarray) -> float:
    """<psi|H|psi>, real for Hermitian H."""
    return float(np.real(np.vdot(psi, h @ psi)))


def work_increment(psi: np.ndarray, model, t: float) -> float:
    """dW = dt (dlambda/dt) <psi| dH/dlambda |psi>, outcome independent.

    Derivatives are central finite differences with step dt/10.
    """
    dt = model.dt
    eps = dt / 10.0
    lam = model.lambda_schedule(t)
    lam_dot = (model.lambda_schedule(t + eps) - model.lambda_schedule(t - eps)) / (2 * eps)
    dh = (model.h_of_lambda(lam + eps) - model.h_of_lambda(lam - eps)) / (2 * eps)
    return dt * lam_dot * float(np.real(np.vdot(psi, dh @ psi)))


def classical_heat_increment(outcome, quanta: dict | None) -> float:
    """Heat carried into the system by one environment outcome.

    quanta maps outcome labels to the energy change of the system (e.g.
    -omega0 for a counted emission). Outcomes without a thermal assignment
    (quanta None, or label missing) carry zero classical heat.
    """
    if quanta is None:
        return 0.0
    label = outcome.value if hasattr(outcome, "value") else outcome
    return float(quanta.get(label, 0.0))


def quantum_heat_increment(
    psi_pre: np.ndarray, psi_post: np.ndarray, h: np.ndarray, dw: float, dqcl: float
) -> float:
    """Residual closure: dQq = d<H> - dW - dQcl."""
    return internal_energy(psi_post, h) - internal_energy(psi_pre, h) - dw - dqcl


def entropy_production(p_init: float, p_final: float, env_log_ratios) -> float:
    """Delta_i s = ln(p_l / p'_m) + sum_k ln(q_fwd_k / q_bwd_k) in nats.

    env_log_ratios is an iterable of per-step ln(q_fwd/q_bwd) terms (already
    coarse-grained where applicable).
    """
    if p_init <= 0.0:
        raise ValueError("entropy production of a forward-impossible path")
    if p_final <= 0.0:
        raise ValueError(
            "zero final probability: the final basis must diagonalize the evolved state"
        )
    return math.log(p_init) - math.log(p_final) + math.fsum(env_log_ratios)


def ift_enumerated(paths) -> tuple[float, float]:
    """Integral fluctuation theorem terms from an exhaustive path list.

    paths yields (p_forward, p_reverse) per path. Returns
    (<exp(-Delta_i s)> over forward-possible paths, lambda = reverse mass of
    forward-impossible paths).
    """
    value = 0.0
    lam = 0.0
    for p_fwd, p_rev in paths:
        if p_fwd > 0.0:
            value += p_rev
        else:
            lam += p_rev
    return value, lam


def ift_sampled(entropy_samples: np.ndarray) -> tuple[float, float]:
    """Monte Carlo <exp(-Delta_i s)> and its standard error."""
    x = np.exp(-np.asarray(entropy_samples, dtype=float))
    n = len(x)
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(n))


def second_law_average(entropy_samples, probs=None) -> float:
    """<Delta_i s>; probability-weighted under enumeration, plain mean for
    Monte Carlo samples."""
    s = np.asarray(entropy_samples, dtype=float)
    if probs is None:
        return float(np.mean(s))
    p = np.asarray(probs, dtype=float)
    return float(np.sum(p * s))


def mean_and_se(samples: np.ndarray) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(len(x)))
