"""Trajectory sampling, path probabilities, and the exact enumeration oracle.

A trajectory is a sequence of measurement outcomes (initial system outcome l,
environment outcomes alpha_1..alpha_K, final system outcome m) together with
the conditioned pure states it generates.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channels import Dilation, KrausSet, kraus_from_dilation
from .errors import EnumerationTooLarge, ImpossibleOutcome

PROB_FLOOR = 1e-15
MAX_PATHS = 10_000_000

CSV_HEADER_PREFIX = ["traj_id", "k", "t", "outcome"]
CSV_HEADER_SUFFIX = ["dW", "dQcl", "dQq", "dis_step"]


@dataclass(frozen=True)
class MeasurementOutcome:
    """One recorded outcome: kind in {"system_initial", "env", "system_final"},
    value an opaque token (or real pair for continuous records), weight its
    probability (discrete) or density contribution (continuous)."""

    kind: str
    value: object
    weight: float


@dataclass
class TrajectoryRecord:
    outcomes: list
    states: list  # normalized kets, length = env steps + 1
    log_prob_fwd: float
    per_step_thermo: list = field(default_factory=list)  # (dW, dQcl, dQq) per step
    times: list = field(default_factory=list)

    def probability(self) -> float:
        return float(np.exp(self.log_prob_fwd))


def traj_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based per-trajectory stream; independent of scheduling order."""
    return np.random.Generator(
        np.random.Philox(key=np.array([master_seed, index], dtype=np.uint64))
    )


def sample_discrete(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF sampling in fixed label order."""
    return int(np.searchsorted(np.cumsum(probs), u * probs.sum(), side="right").clip(0, len(probs) - 1))


def state_update(psi: np.ndarray, m: np.ndarray, prob_floor: float = PROB_FLOOR):
    """Posterior state M|psi>/||M|psi>|| and outcome probability ||M|psi>||^2."""
    phi = m @ psi
    p = float(np.real(np.vdot(phi, phi)))
    if p <= prob_floor:
        raise ImpossibleOutcome(f"outcome probability {p:.3e} below floor")
    return phi / np.sqrt(p), p


def traj_probability(
    initial_probs: np.ndarray,
    initial_basis: np.ndarray,
    l: int,
    kraus_ops: list,
    final_basis: np.ndarray,
    m: int,
) -> float:
    """P(Gamma) = p_l |<xi_m| M_K ... M_1 |psi_l>|^2 for one outcome sequence."""
    psi = initial_basis[:, l]
    for op in kraus_ops:
        psi = op @ psi
    amp = np.vdot(final_basis[:, m], psi)
    return float(initial_probs[l] * np.abs(amp) ** 2)


def _resolve_channel(channel, rho_s):
    if isinstance(channel, Dilation):
        return kraus_from_dilation(channel, rho_sys=rho_s)
    return channel


def final_basis_of(rho_s: np.ndarray, kraus_sets: list) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-populations and eigenbasis of the channel-evolved average state."""
    rho = rho_s
    for ks in kraus_sets:
        rho = ks.apply(rho)
    p, basis = linalg.eig_hermitian(rho)
    return np.clip(p, 0.0, None), basis


def sample_two_point(rho_s: np.ndarray, channel, rng_seed: int) -> TrajectoryRecord:
    """Sample one (l, alpha, m) trajectory of a single-step channel.

    The initial measurement basis is the eigenbasis of rho_s; the final one
    is the eigenbasis of the channel output, so neither measurement disturbs
    the average evolution.
    """
    rho_s = linalg.check_density(rho_s)
    ks = _resolve_channel(channel, rho_s)
    rng = traj_rng(rng_seed, 0) if isinstance(rng_seed, int) else rng_seed

    p_init, b_init = linalg.eig_hermitian(rho_s)
    p_init = np.clip(p_init, 0.0, None)
    l = sample_discrete(p_init, rng.random())
    psi = b_init[:, l]

    probs = np.array([max(np.linalg.norm(m @ psi) ** 2, 0.0) for _, m in ks.ops])
    a = sample_discrete(probs, rng.random())
    label, op = ks.ops[a]
    psi1, p_alpha = state_update(psi, op)

    p_fin, b_fin = final_basis_of(rho_s, [ks])
    amp2 = np.abs(b_fin.conj().T @ psi1) ** 2
    m_idx = sample_discrete(amp2, rng.random())

    log_p = float(np.log(p_init[l]) + np.log(p_alpha) + np.log(amp2[m_idx]))
    return TrajectoryRecord(
        outcomes=[
            MeasurementOutcome("system_initial", l, float(p_init[l])),
            MeasurementOutcome("env", label, p_alpha),
            MeasurementOutcome("system_final", m_idx, float(amp2[m_idx])),
        ],
        states=[psi, psi1],
        log_prob_fwd=log_p,
        times=[0.0, 1.0],
    )


def enumerate_trajectories(
    rho_s: np.ndarray,
    kraus_sequence: list,
    final_basis: np.ndarray | None = None,
    prob_floor: float = 0.0,
):
    """Exhaustive list of ((l, labels..., m), P) over all discrete paths.

    Probabilities sum to one. The final measurement basis defaults to the
    eigenbasis of the evolved average state. Paths with probability <=
    prob_floor are still listed (their reverse weight feeds the
    absolute-irreversibility bookkeeping).
    """
    rho_s = linalg.check_density(rho_s)
    d = rho_s.shape[0]
    n_paths = d * d
    for ks in kraus_sequence:
        n_paths *= len(ks.ops)
    if n_paths > MAX_PATHS:
        raise EnumerationTooLarge(f"{n_paths} paths exceed the {MAX_PATHS} guard")

    p_init, b_init = linalg.eig_hermitian(rho_s)
    p_init = np.clip(p_init, 0.0, None)
    if final_basis is None:
        _, final_basis = final_basis_of(rho_s, kraus_sequence)

    paths = []

    def walk(k, psi, labels, weight):
        if k == len(kraus_sequence):
            amps = np.abs(final_basis.conj().T @ psi) ** 2
            for m in range(d):
                paths.append((labels + (m,), float(weight * amps[m])))
            return
        for label, op in kraus_sequence[k].ops:
            walk(k + 1, op @ psi, labels + (label,), weight)

    for l in range(d):
        # unnormalized conditioned vector carries the path weight in its norm
        walk(0, np.sqrt(p_init[l]) * b_init[:, l], (l,), 1.0)

    out = [(labels, p) for labels, p in paths if p > prob_floor or prob_floor == 0.0]
    return out


def record_to_csv_rows(record: TrajectoryRecord, traj_id: int) -> list[list[str]]:
    """Flatten one record into per-step CSV rows (fixed schema)."""
    rows = []
    env = [o for o in record.outcomes if o.kind == "env"]
    for k, psi in enumerate(record.states):
        if k == 0:
            label = f"init:{record.outcomes[0].value}"
            thermo = (0.0, 0.0, 0.0)
        else:
            label = _fmt_label(env[k - 1].value)
            thermo = (
                record.per_step_thermo[k - 1]
                if k - 1 < len(record.per_step_thermo)
                else (0.0, 0.0, 0.0)
            )
        t = record.times[k] if k < len(record.times) else float(k)
        row = [str(traj_id), str(k), _fmt(t), label]
        row += [_fmt(a) for pair in ((z.real, z.imag) for z in psi) for a in pair]
        row += [_fmt(x) for x in thermo[:3]]
        row += [_fmt(thermo[3]) if len(thermo) > 3 else _fmt(0.0)]
        rows.append(row)
    return rows


def csv_header(dim: int) -> list[str]:
    amps = []
    for i in range(dim):
        amps += [f"re_amp_{i}", f"im_amp_{i}"]
    return CSV_HEADER_PREFIX + amps + CSV_HEADER_SUFFIX


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_label(value) -> str:
    if isinstance(value, tuple):
        return "|".join(str(v) for v in value)
    return str(value)


def format_row(row) -> list[str]:
    """Stringify one mixed-type ledger row with stable float formatting."""
    out = []
    for x in row:
        if isinstance(x, str):
            out.append(x)
        elif isinstance(x, (int, np.integer)):
            out.append(str(int(x)))
        else:
            out.append(_fmt(x))
    return out


def write_csv(records_rows, dim: int, fh: io.TextIOBase) -> None:
    fh.write(",".join(csv_header(dim)) + "\n")
    for row in records_rows:
        fh.write(",".join(row) + "\n")
