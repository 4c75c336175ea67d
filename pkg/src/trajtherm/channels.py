"""Quantum channels as labeled Kraus sets.

Covers construction from Stinespring dilations, time reversal of a Kraus
decomposition, and coarse graining of outcome labels into macroscopic
classes that still admit pure-state trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    DimensionError,
    DivisionByZeroOutcome,
    NotCoarseGrainable,
    UnitarityError,
)

# Environment eigenvalues below this are dropped from the outcome alphabet:
# a zero-probability initial environment eigenvector never occurs forward
# and has no well-defined reversal.
ENV_PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class KrausSet:
    """A labeled Kraus decomposition of one stochastic channel.

    tol_cptp bounds ||sum M^dag M - 1||_max: 1e-10 for exact sets, larger
    for dt-truncated unraveling sets.
    """

    dim: int
    ops: tuple  # of (label, ndarray) pairs
    tol_cptp: float = 1e-10

    def __post_init__(self):
        for label, m in self.ops:
            if m.shape != (self.dim, self.dim):
                raise DimensionError(f"op {label!r} has shape {m.shape}")
        defect = self.cptp_defect()
        if defect > self.tol_cptp:
            raise UnitarityError(
                f"Kraus set violates CPTP closure: defect {defect:.3e} > {self.tol_cptp:.3e}"
            )

    def labels(self):
        return [label for label, _ in self.ops]

    def op(self, label) -> np.ndarray:
        for lab, m in self.ops:
            if lab == label:
                return m
        raise KeyError(label)

    def cptp_defect(self) -> float:
        acc = sum(linalg.dag(m) @ m for _, m in self.ops)
        return float(np.max(np.abs(acc - np.eye(self.dim))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Channel average: sum_a M_a rho M_a^dag."""
        return sum(m @ rho @ linalg.dag(m) for _, m in self.ops)

    def outcome_probs(self, rho: np.ndarray) -> dict:
        return {
            label: float(np.real(np.trace(m @ rho @ linalg.dag(m))))
            for label, m in self.ops
        }


@dataclass(frozen=True)
class Dilation:
    """Stinespring dilation (V, rho_E) of a channel on the system factor.

    out_basis holds the environment basis measured after the interaction,
    one normalized column per outcome; None means "eigenbasis of the evolved
    environment state", which is resolved against a system input state.
    """

    v: np.ndarray
    rho_env: np.ndarray
    dim_sys: int
    dim_env: int
    out_basis: np.ndarray | None = field(default=None)

    def __post_init__(self):
        d = self.dim_sys * self.dim_env
        if self.v.shape != (d, d):
            raise DimensionError(f"V is {self.v.shape}, expected {(d, d)}")
        if np.max(np.abs(linalg.dag(self.v) @ self.v - np.eye(d))) > 1e-10:
            raise UnitarityError("dilation unitary fails V^dag V = 1 at 1e-10")
        linalg.check_density(self.rho_env)

    def evolved_env(self, rho_sys: np.ndarray) -> np.ndarray:
        """Average environment state after the joint interaction."""
        joint = self.v @ np.kron(rho_sys, self.rho_env) @ linalg.dag(self.v)
        return linalg.partial_trace(joint, (self.dim_sys, self.dim_env), "env")

    def apply(self, rho_sys: np.ndarray) -> np.ndarray:
        """Channel output tr_E[V (rho (x) rho_E) V^dag]."""
        joint = self.v @ np.kron(rho_sys, self.rho_env) @ linalg.dag(self.v)
        return linalg.partial_trace(joint, (self.dim_sys, self.dim_env), "system")


def kraus_from_dilation(d: Dilation, rho_sys: np.ndarray | None = None) -> KrausSet:
    """Kraus operators M_(mu,nu) = sqrt(q_mu) <out_nu| V |in_mu>.

    The input basis is the eigenbasis of rho_env. The output basis is
    d.out_basis if set, otherwise the eigenbasis of the environment state
    evolved from rho_sys (the maximally mixed system when omitted). Labels
    are (mu, nu) index pairs. Eigenvectors of rho_env with negligible weight
    are excluded from the outcome alphabet.
    """
    q, phi = linalg.eig_hermitian(d.rho_env)
    if d.out_basis is not None:
        out = d.out_basis
    else:
        if rho_sys is None:
            rho_sys = np.eye(d.dim_sys, dtype=complex) / d.dim_sys
        _, out = linalg.eig_hermitian(d.evolved_env(rho_sys))
    ds, de = d.dim_sys, d.dim_env
    vt = d.v.reshape(ds, de, ds, de)
    ops = []
    for mu in range(de):
        if q[mu] <= ENV_PROB_FLOOR:
            continue
        for nu in range(out.shape[1]):
            m = np.sqrt(q[mu]) * np.einsum(
                "a,iajb,b->ij", out[:, nu].conj(), vt, phi[:, mu]
            )
            ops.append(((mu, nu), m))
    return KrausSet(dim=ds, ops=tuple(ops), tol_cptp=1e-10)


def reverse_kraus(k: KrausSet, q_fwd: dict, q_bwd: dict, tol_cptp: float = 1e-10) -> KrausSet:
    """Time-reversed set M~_a = sqrt(q_bwd(a)/q_fwd(a)) M_a^dag.

    q_fwd(a) is the probability of the initial environment eigenvector
    visited by outcome a in the forward process; q_bwd(a) that of the final
    environment eigenvector, which seeds the reversed process.
    """
    ops = []
    for label, m in k.ops:
        pf = q_fwd[label]
        if pf <= 0.0:
            raise DivisionByZeroOutcome(f"outcome {label!r} has zero forward probability")
        ops.append((label, np.sqrt(q_bwd[label] / pf) * linalg.dag(m)))
    return KrausSet(dim=k.dim, ops=tuple(ops), tol_cptp=tol_cptp)


def coarse_grain(k: KrausSet, partition: dict, tol_prop: float = 1e-8) -> KrausSet:
    """Group microscopic outcomes into macroscopic classes.

    partition maps each class label to the list of member labels. Members of
    one class must be proportional with a real positive ratio; otherwise the
    grouped evolution does not preserve pure states and NotCoarseGrainable
    is raised. The grouped operator is

        M_class = sqrt(q_class) M / sqrt(tr[M^dag M]),
        q_class = sum_members tr[M^dag M],

    which reproduces the summed action of the members on every state.
    """
    seen = []
    for members in partition.values():
        seen.extend(members)
    if sorted(map(repr, seen)) != sorted(map(repr, k.labels())):
        raise ValueError("partition does not cover the label set exactly once")

    ops = []
    for class_label, members in partition.items():
        mats = [k.op(lab) for lab in members]
        norms2 = [float(np.real(np.trace(linalg.dag(m) @ m))) for m in mats]
        ref_idx = int(np.argmax(norms2))
        ref, ref_n2 = mats[ref_idx], norms2[ref_idx]
        scale = float(np.max(np.abs(ref)))
        for m, n2 in zip(mats, norms2):
            c = np.sqrt(n2 / ref_n2)
            if np.max(np.abs(m - c * ref)) > tol_prop * max(scale, 1.0):
                raise NotCoarseGrainable(
                    f"class {class_label!r} mixes non-proportional operators"
                )
        q_class = sum(norms2)
        ops.append((class_label, np.sqrt(q_class / ref_n2) * ref))
    return KrausSet(dim=k.dim, ops=tuple(ops), tol_cptp=k.tol_cptp)
