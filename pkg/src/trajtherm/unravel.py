"""Lindblad generator and its quantum-jump / quantum-state-diffusion unravelings.

The master equation is the accuracy reference (RK4); the unravelings are
first order in dt, matching the truncation of their Kraus operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channels import KrausSet
from .errors import ParameterError, StepSizeError

STIFFNESS_GUARD = 0.05


@dataclass
class LindbladModel:
    """A driven Lindblad model: H(lambda), jump operators L_j(lambda), and a
    control schedule lambda(t). Time-independent problems use the identity
    schedule and constant callables."""

    h_of_lambda: object  # callable lambda -> ndarray
    jumps: list  # of callables lambda -> ndarray
    lambda_schedule: object = field(default=lambda t: t)
    dt: float = 1e-3

    def __post_init__(self):
        h0 = self.h_of_lambda(self.lambda_schedule(0.0))
        if not linalg.is_hermitian(h0, 1e-9):
            raise ParameterError("H(lambda) is not Hermitian at t=0")
        if self.dt * self.max_rate() > STIFFNESS_GUARD:
            raise ParameterError(
                f"dt * max jump rate = {self.dt * self.max_rate():.3g} exceeds {STIFFNESS_GUARD}"
            )

    @property
    def dim(self) -> int:
        return self.h_of_lambda(self.lambda_schedule(0.0)).shape[0]

    def h(self, t: float) -> np.ndarray:
        return self.h_of_lambda(self.lambda_schedule(t))

    def jump_ops(self, t: float) -> list:
        lam = self.lambda_schedule(t)
        return [l(lam) for l in self.jumps]

    def max_rate(self, t: float = 0.0) -> float:
        rates = [np.linalg.norm(l, 2) ** 2 for l in self.jump_ops(t)]
        return max(rates) if rates else 0.0


def lindblad_rhs(rho: np.ndarray, model: LindbladModel, t: float) -> np.ndarray:
    """d rho/dt = i[rho, H] + sum_j (L rho L^dag - (1/2){L^dag L, rho})."""
    h = model.h(t)
    out = 1j * (rho @ h - h @ rho)
    for l in model.jump_ops(t):
        ld = l.conj().T
        ldl = ld @ l
        out += l @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def qj_kraus(model: LindbladModel, t: float) -> KrausSet:
    """Quantum-jump Kraus set for one step: M_j = sqrt(dt) L_j plus the
    no-jump operator 1 - dt (iH + (1/2) sum L^dag L)."""
    dt = model.dt
    h = model.h(t)
    ls = model.jump_ops(t)
    eye = np.eye(model.dim)
    acc = sum((l.conj().T @ l for l in ls), start=np.zeros_like(h))
    ops = [("nojump", eye - dt * (1j * h + 0.5 * acc))]
    ops += [((f"jump:{j}"), np.sqrt(dt) * l) for j, l in enumerate(ls)]
    tol = 10.0 * max(model.max_rate(t) * dt, np.linalg.norm(h, 2) * dt) ** 2 + 1e-12
    return KrausSet(dim=model.dim, ops=tuple(ops), tol_cptp=tol)


@dataclass(frozen=True)
class QSDIncrement:
    """Wiener innovations, one per jump channel, variance dt (Ito rule)."""

    dw: np.ndarray


def qsd_step(psi: np.ndarray, model: LindbladModel, t: float, rng: np.random.Generator):
    """One diffusive-unraveling step.

    The physical readout of channel j fluctuates around <L_j + L_j^dag>; its
    zero-mean innovation dw_j ~ N(0, dt) is returned. The applied operator is

        1 - dt (iH + (1/2) sum L^dag L) + sum_j (dw_j + <L_j + L_j^dag> dt) L_j,

    so equal-weight averages of the normalized posterior states reproduce the
    master equation to O(dt). The returned weight is the Gaussian density of
    the innovations times the squared norm of the update (the outcome
    probability density, used in entropy accounting).
    """
    dt = model.dt
    h = model.h(t)
    ls = model.jump_ops(t)
    dw = rng.standard_normal(len(ls)) * np.sqrt(dt)
    acc = sum((l.conj().T @ l for l in ls), start=np.zeros_like(h))
    m = np.eye(model.dim, dtype=complex) - dt * (1j * h + 0.5 * acc)
    for j, l in enumerate(ls):
        mean = float(np.real(np.vdot(psi, (l + l.conj().T) @ psi)))
        m = m + (dw[j] + mean * dt) * l
    phi = m @ psi
    norm2 = float(np.real(np.vdot(phi, phi)))
    density = float(np.prod(np.exp(-dw ** 2 / (2 * dt)) / np.sqrt(2 * np.pi * dt)))
    return phi / np.sqrt(norm2), QSDIncrement(dw=dw), density * norm2


def evolve_master(rho0: np.ndarray, model: LindbladModel, t_grid: np.ndarray) -> list:
    """RK4 integration of the Lindblad equation on a uniform grid with step
    model.dt; each output is re-symmetrized and validated."""
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) > 1:
        steps = np.diff(t_grid)
        if np.max(np.abs(steps - model.dt)) > 1e-9 * max(model.dt, 1.0):
            raise ParameterError("t_grid must be uniform with step model.dt")
    rho = linalg.check_density(rho0).astype(complex)
    dt = model.dt
    out = [rho.copy()]
    for t in t_grid[:-1]:
        k1 = lindblad_rhs(rho, model, t)
        k2 = lindblad_rhs(rho + 0.5 * dt * k1, model, t + 0.5 * dt)
        k3 = lindblad_rhs(rho + 0.5 * dt * k2, model, t + 0.5 * dt)
        k4 = lindblad_rhs(rho + dt * k3, model, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = linalg.hermitize(rho)
        w = np.linalg.eigvalsh(rho)
        if w.min() < -1e-8:
            raise StepSizeError(
                f"positivity violated ({w.min():.3e}) at t={t + dt:.4g}; reduce dt"
            )
        out.append(rho.copy())
    return out
