"""Scenario builders and ensemble engines for the three worked examples:

* ``thermalization``: relaxation of a system against a resonant finite bath,
  with the augmented trajectory (extra energy measurement) that splits the
  entropy production into a quantum (decoherence) and classical part.
* ``fluorescence``: a driven qubit whose photon exchanges with a thermal
  reservoir are counted (quantum-jump unraveling).
* ``monitoring``: continuous weak measurement of sigma_z through a cavity
  meter (diffusive unraveling with exact outcome sampling).

The ensemble engines step all trajectories of a block at once with numpy;
randomness comes from per-trajectory counter-based streams, so results are
independent of the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg, thermo
from .channels import Dilation, kraus_from_dilation
from .errors import ModelBuildError, ParameterError
from .thermo import EnsembleSummary
from .trajectories import traj_rng
from .unravel import LindbladModel, evolve_master

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |g><e|, index 0 = e
SIGMA_PLUS = SIGMA_MINUS.conj().T

_BLOCK = 2048


def _run_blocks(n_traj: int, fn, workers: int, block: int = _BLOCK):
    """Apply fn(start, stop) to trajectory-index blocks; results in block order."""
    spans = [(a, min(a + block, n_traj)) for a in range(0, n_traj, block)]
    if workers <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ab: fn(*ab), spans))


# ---------------------------------------------------------------------------
# Example 1: thermalization against a resonant copy bath
# ---------------------------------------------------------------------------

def build_thermalization(
    rho_s: np.ndarray,
    h_s: np.ndarray,
    temperature: float,
    theta: float = math.pi / 2,
    tol_therm: float = 1e-8,
) -> Dilation:
    """Finite-bath thermalization dilation.

    The bath is a copy of the system (same Hamiltonian) in its Gibbs state,
    and V = exp(-i theta SWAP), which commutes with H_S + H_E for every
    theta. The default theta = pi/2 is the full exchange, whose system
    marginal is exactly thermal; other theta values raise ModelBuildError
    unless the marginal still lands within tol_therm of the Gibbs state.
    """
    rho_s = linalg.check_density(rho_s)
    d = rho_s.shape[0]
    tau = linalg.thermal_state(h_s, temperature)
    swap = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    v = math.cos(theta) * np.eye(d * d) - 1j * math.sin(theta) * swap

    h_tot = np.kron(h_s, np.eye(d)) + np.kron(np.eye(d), h_s)
    if np.max(np.abs(v @ h_tot - h_tot @ v)) > 1e-10:
        raise ModelBuildError("joint unitary does not conserve total energy")

    dil = Dilation(v=v, rho_env=tau, dim_sys=d, dim_env=d)
    marginal = dil.apply(rho_s)
    dev = float(np.max(np.abs(marginal - tau)))
    if dev > tol_therm:
        raise ModelBuildError(
            f"system marginal misses the Gibbs state by {dev:.3e} (> {tol_therm:g})"
        )
    return dil


@dataclass
class ThermalizationPath:
    labels: tuple  # (l, m, n, mu, nu)
    p_fwd: float
    p_rev: float
    dis_q: float  # nan for forward-impossible paths
    dis_cl: float
    q_quantum: float
    q_classical: float


@dataclass
class ThermalizationResult:
    paths: list
    ift_value: float
    lambda_abs: float
    avg_dis: float
    avg_dis_q: float
    avg_dis_cl: float
    avg_qq: float
    avg_qcl: float
    d_rho_eta: float
    d_eta_tau: float
    d_rho_tau: float
    d_envfinal_env: float

    def summary(self, seed: int = 0) -> EnsembleSummary:
        return EnsembleSummary(
            mean_w=0.0,
            mean_qcl=self.avg_qcl,
            mean_qq=self.avg_qq,
            mean_entropy=self.avg_dis,
            ift_value=self.ift_value,
            lambda_abs=self.lambda_abs,
            std_errors={},
            n_traj=len(self.paths),
            seed=seed,
            extra={
                "mean_entropy_quantum": self.avg_dis_q,
                "mean_entropy_classical": self.avg_dis_cl,
                "rel_entropy_rho_eta": self.d_rho_eta,
                "rel_entropy_eta_tau": self.d_eta_tau,
                "rel_entropy_rho_tau": self.d_rho_tau,
                "rel_entropy_env_final_env": self.d_envfinal_env,
                "mode": "enumerate",
            },
        )


def enumerate_thermalization(
    rho_s: np.ndarray,
    h_s: np.ndarray,
    temperature: float,
    theta: float = math.pi / 2,
) -> ThermalizationResult:
    """Exhaustive augmented trajectories (l, m, n, mu, nu) of the
    thermalization scenario, with per-path entropy production split into the
    decoherence (quantum) and thermalization (classical) contributions."""
    rho_s = linalg.check_density(rho_s)
    d = rho_s.shape[0]
    dil = build_thermalization(rho_s, h_s, temperature, theta=theta)
    tau = dil.rho_env

    p_l, psi = linalg.eig_hermitian(rho_s)
    p_l = np.clip(p_l, 0.0, None)
    e_vals, e_vecs = linalg.eig_hermitian(h_s)

    # dephased state in the energy eigenbasis
    overlap2 = np.abs(e_vecs.conj().T @ psi) ** 2  # [m, l]
    eta_diag = overlap2 @ p_l
    eta = (e_vecs * eta_diag) @ e_vecs.conj().T

    env_final = dil.evolved_env(eta)
    q_mu, _ = linalg.eig_hermitian(tau)
    _, out_basis = linalg.eig_hermitian(env_final)
    # the reverse process re-prepares the bath thermally; q'_nu is the weight
    # of outcome basis vector nu under that preparation
    qp_nu = np.clip(
        np.real(np.einsum("ia,ij,ja->a", out_basis.conj(), tau, out_basis)),
        0.0,
        None,
    )
    dil = Dilation(
        v=dil.v, rho_env=tau, dim_sys=d, dim_env=d, out_basis=out_basis
    )
    kraus = kraus_from_dilation(dil, rho_sys=eta)

    sys_final = dil.apply(eta)
    pp_n, f_vecs = linalg.eig_hermitian(sys_final)
    pp_n = np.clip(pp_n, 0.0, None)

    energies_init = np.real(np.einsum("il,ij,jl->l", psi.conj(), h_s, psi))

    paths = []
    for l in range(d):
        for m in range(d):
            p_lm = p_l[l] * overlap2[m, l]
            qq = float(e_vals[m] - energies_init[l])
            for (mu, nu), m_op in kraus.ops:
                vec = m_op @ e_vecs[:, m]
                amps = np.abs(f_vecs.conj().T @ vec) ** 2
                for n in range(d):
                    p_fwd = float(p_lm * amps[n])
                    # reverse: start thermal, reverse-thermalize, then undo
                    # the decoherence branch
                    m_rev = np.sqrt(qp_nu[nu] / q_mu[mu]) * m_op.conj().T
                    amp_rev = np.abs(
                        np.vdot(e_vecs[:, m], m_rev @ f_vecs[:, n])
                    ) ** 2
                    p_rev = float(pp_n[n] * amp_rev * overlap2[m, l])
                    qcl = float(
                        np.real(np.vdot(f_vecs[:, n], h_s @ f_vecs[:, n])) - e_vals[m]
                    )
                    if p_fwd > 0.0 and p_rev > 0.0:
                        dis_q = math.log(p_l[l]) - math.log(eta_diag[m])
                        dis_cl = (
                            math.log(p_fwd) - math.log(p_rev) - dis_q
                        )
                    else:
                        dis_q = math.nan
                        dis_cl = math.nan
                    paths.append(
                        ThermalizationPath(
                            labels=(l, m, n, mu, nu),
                            p_fwd=p_fwd,
                            p_rev=p_rev,
                            dis_q=dis_q,
                            dis_cl=dis_cl,
                            q_quantum=qq,
                            q_classical=qcl,
                        )
                    )

    ift_value, lam = thermo.ift_enumerated((p.p_fwd, p.p_rev) for p in paths)
    live = [p for p in paths if p.p_fwd > 0.0]
    avg_dis_q = math.fsum(p.p_fwd * p.dis_q for p in live)
    avg_dis_cl = math.fsum(p.p_fwd * p.dis_cl for p in live)
    avg_qq = math.fsum(p.p_fwd * p.q_quantum for p in live)
    avg_qcl = math.fsum(p.p_fwd * p.q_classical for p in live)

    tau_sys = linalg.thermal_state(h_s, temperature)
    return ThermalizationResult(
        paths=paths,
        ift_value=ift_value,
        lambda_abs=lam,
        avg_dis=avg_dis_q + avg_dis_cl,
        avg_dis_q=avg_dis_q,
        avg_dis_cl=avg_dis_cl,
        avg_qq=avg_qq,
        avg_qcl=avg_qcl,
        d_rho_eta=linalg.rel_entropy(rho_s, eta) if _supported(rho_s, eta) else math.inf,
        d_eta_tau=linalg.rel_entropy(eta, tau_sys),
        d_rho_tau=linalg.rel_entropy(rho_s, tau_sys),
        d_envfinal_env=linalg.rel_entropy(env_final, tau),
    )


def _supported(rho, sigma) -> bool:
    try:
        linalg.rel_entropy(rho, sigma)
        return True
    except linalg.SupportError:
        return False


# ---------------------------------------------------------------------------
# Example 2: photon counting of driven-qubit fluorescence (quantum jumps)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluorescenceParams:
    """Driven qubit coupled to a thermal photon reservoir.

    g is the full Rabi frequency: the rotating-frame drive is (g/2) sigma_x,
    which is the convention under which the steady-state flux formulas hold.
    nbar is the reservoir occupation at omega0; nbar = 0 means T = 0 (the
    absorption channel drops out).
    """

    omega0: float
    omega_l: float
    g: float
    gamma: float
    nbar: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0 or self.g < 0 or self.nbar < 0:
            raise ParameterError("need gamma > 0, g >= 0, nbar >= 0")

    @property
    def delta(self) -> float:
        return self.omega0 - self.omega_l

    @property
    def temperature(self) -> float:
        if self.nbar == 0.0:
            return 0.0
        return self.omega0 / math.log(1.0 + 1.0 / self.nbar)

    def thermal_populations(self) -> tuple[float, float]:
        """(p_e, p_g) of the bare qubit at the reservoir temperature."""
        pe = self.nbar / (2.0 * self.nbar + 1.0)
        return pe, 1.0 - pe


def fluorescence_fluxes(p: FluorescenceParams) -> tuple[float, float, float]:
    """Closed-form steady-state (dW/dt, dQcl/dt, dQq/dt); their sum is zero."""
    dnm = 2.0 * p.g**2 + 4.0 * p.delta**2 + p.gamma**2 * (2.0 * p.nbar + 1.0) ** 2
    w_dot = p.gamma * p.omega_l * p.g**2 / dnm
    qcl_dot = -p.gamma * p.omega0 * p.g**2 / dnm
    qq_dot = p.gamma * p.delta * p.g**2 / dnm
    return w_dot, qcl_dot, qq_dot


def fluorescence_model(p: FluorescenceParams, dt: float) -> LindbladModel:
    """Lab-frame Lindblad model; the control parameter is lambda = t."""
    gm = math.sqrt(p.gamma * (p.nbar + 1.0))
    gp = math.sqrt(p.gamma * p.nbar)

    def h_of_lambda(lam):
        ph = np.exp(-1j * p.omega_l * lam)
        return 0.5 * p.omega0 * SIGMA_Z + 0.5 * p.g * (
            ph * SIGMA_PLUS + np.conj(ph) * SIGMA_MINUS
        )

    jumps = [lambda lam: gm * SIGMA_MINUS]
    if p.nbar > 0:
        jumps.append(lambda lam: gp * SIGMA_PLUS)
    return LindbladModel(h_of_lambda=h_of_lambda, jumps=jumps, dt=dt)


@dataclass
class FluorescenceRun:
    params: FluorescenceParams
    times: np.ndarray
    w: np.ndarray  # per-trajectory totals
    qcl: np.ndarray
    qq: np.ndarray
    du: np.ndarray
    l_init: np.ndarray
    m_final: np.ndarray
    flux_w: tuple  # (mean, se) over the post-transient window
    flux_qcl: tuple
    flux_qq: tuple
    mean_states: dict  # step index -> ensemble-average density matrix
    entropy: np.ndarray | None
    jarzynski: np.ndarray | None
    master_final: np.ndarray
    seed: int
    ledger_rows: list = field(default_factory=list)

    def summary(self) -> EnsembleSummary:
        n = len(self.w)
        mw, se_w = thermo.mean_and_se(self.w)
        mqcl, se_qcl = thermo.mean_and_se(self.qcl)
        mqq, se_qq = thermo.mean_and_se(self.qq)
        if self.entropy is not None:
            ms, se_s = thermo.mean_and_se(self.entropy)
            ift, se_ift = thermo.ift_sampled(self.entropy)
        else:
            ms = se_s = ift = se_ift = float("nan")
        extra = {
            "flux_W": self.flux_w[0],
            "flux_Qcl": self.flux_qcl[0],
            "flux_Qq": self.flux_qq[0],
            "flux_W_se": self.flux_w[1],
            "flux_Qcl_se": self.flux_qcl[1],
            "flux_Qq_se": self.flux_qq[1],
            "mode": "sample",
        }
        if self.jarzynski is not None:
            jz, se_jz = thermo.mean_and_se(self.jarzynski)
            extra["jarzynski"] = jz
            extra["jarzynski_se"] = se_jz
        return EnsembleSummary(
            mean_w=mw,
            mean_qcl=mqcl,
            mean_qq=mqq,
            mean_entropy=ms,
            ift_value=ift,
            lambda_abs=0.0,
            std_errors={
                "W": se_w,
                "Qcl": se_qcl,
                "Qq": se_qq,
                "entropy": se_s,
                "ift": se_ift,
            },
            n_traj=n,
            seed=self.seed,
            extra=extra,
        )


def run_fluorescence(
    p: FluorescenceParams,
    n_traj: int,
    t_final: float,
    dt: float,
    seed: int,
    transient: float = 0.0,
    workers: int = 1,
    record_steps: tuple = (),
    initial: str = "thermal",
    ledger_upto: int = 0,
) -> FluorescenceRun:
    """Quantum-jump ensemble of the driven qubit with full energy ledgers.

    Protocol: sample the initial energy eigenstate (thermal populations, or
    the ground state for initial="ground"), evolve with per-step photon
    counting, then measure the energy at t_final. Work uses the bare-qubit
    internal energy U = <H_0>; jump steps carry no work increment (the jump
    Kraus operator contains no drive evolution). Quantum heat is the closure
    residual, including the final-measurement collapse.

    Steady fluxes are averaged over [transient, t_final]. Entropy production
    per trajectory is ln p_l - ln p'_m - Q_cl / T (final populations from the
    RK4 master solution); the Jarzynski samples exp(-(W+Qq)/T) use thermal
    boundary distributions. Both are skipped at nbar = 0.
    """
    if p.gamma * dt > 0.01:
        raise ParameterError(f"gamma*dt = {p.gamma * dt:.3g} exceeds 0.01")
    steps = int(round(t_final / dt))
    k0 = int(round(transient / dt))
    window = (steps - k0) * dt
    gm = p.gamma * (p.nbar + 1.0)
    gp = p.gamma * p.nbar
    pe_th, pg_th = p.thermal_populations()
    if initial == "ground":
        pe_init = 0.0
    elif initial == "thermal":
        pe_init = pe_th
    else:
        raise ParameterError(f"unknown initial {initial!r}")

    model = fluorescence_model(p, dt)
    rho0 = np.diag([pe_init, 1.0 - pe_init]).astype(complex)
    grid = np.arange(steps + 1) * dt
    master = evolve_master(rho0, model, grid)
    master_final = master[-1]
    pp = np.clip(np.real(np.diag(master_final)), 1e-300, None)  # (p'_e, p'_g)

    record_steps = tuple(sorted(set(int(k) for k in record_steps)))

    # per-step jump-free update matrix is time dependent; precompute phases
    half_g = 0.5 * p.g

    temp = p.temperature if p.nbar > 0 else None

    def block(a: int, b: int):
        nb = b - a
        psi = np.zeros((nb, 2), dtype=complex)
        u_init = np.empty(nb)
        u_steps = np.empty((nb, steps))
        u_fin = np.empty(nb)
        for i in range(nb):
            rng = traj_rng(seed, a + i)
            u_init[i] = rng.random()
            u_steps[i] = rng.random(steps)
            u_fin[i] = rng.random()
        l_e = u_init < pe_init
        psi[l_e, 0] = 1.0
        psi[~l_e, 1] = 1.0
        u0 = np.where(l_e, 0.5 * p.omega0, -0.5 * p.omega0)

        cap = max(0, min(b, ledger_upto) - a)
        rows = []

        def row(i, k, lab, dw_i, dqcl_i, dqq_i, dis_i, t=None):
            rows.append([
                a + i, k, k * dt if t is None else t, lab,
                psi[i, 0].real, psi[i, 0].imag, psi[i, 1].real, psi[i, 1].imag,
                dw_i, dqcl_i, dqq_i, dis_i,
            ])

        for i in range(cap):
            lab = "init:e" if l_e[i] else "init:g"
            if temp is not None and 0.0 < pe_init < 1.0:
                dis0 = math.log(pe_init if l_e[i] else 1.0 - pe_init)
            elif temp is not None:
                dis0 = 0.0
            else:
                dis0 = math.nan
            row(i, 0, lab, 0.0, 0.0, 0.0, dis0)

        w = np.zeros(nb)
        qcl = np.zeros(nb)
        w_win = np.zeros(nb)
        qcl_win = np.zeros(nb)
        qq_win = np.zeros(nb)
        u_prev = u0.copy()
        states = {}
        if 0 in record_steps:
            states[0] = np.einsum("bi,bj->ij", psi, psi.conj())

        for k in range(steps):
            t = k * dt
            ce = psi[:, 0]
            cg = psi[:, 1]
            pe = np.abs(ce) ** 2
            pg = np.abs(cg) ** 2
            p_em = dt * gm * pe
            p_ab = dt * gp * pg
            u = u_steps[:, k]
            em = u < p_em
            ab = (~em) & (u < p_em + p_ab)
            nj = ~(em | ab)

            s_rot = np.conj(cg) * ce * np.exp(1j * p.omega_l * t)
            dw_k = np.where(nj, -p.g * p.omega_l * dt * np.imag(s_rot), 0.0)
            dqcl_k = np.where(em, -p.omega0, 0.0) + np.where(ab, p.omega0, 0.0)

            ph = np.exp(-1j * p.omega_l * t)
            a00 = 1.0 - dt * (1j * 0.5 * p.omega0 + 0.5 * gm)
            a11 = 1.0 + dt * (1j * 0.5 * p.omega0 - 0.5 * gp)
            a01 = -dt * 1j * half_g * ph
            a10 = -dt * 1j * half_g * np.conj(ph)
            new_e = a00 * ce + a01 * cg
            new_g = a10 * ce + a11 * cg
            # jumps overwrite the drift update, keeping the collapsed phase
            if em.any():
                phase = ce[em] / np.abs(ce[em])
                new_e[em] = 0.0
                new_g[em] = phase
            if ab.any():
                phase = cg[ab] / np.abs(cg[ab])
                new_e[ab] = phase
                new_g[ab] = 0.0
            norm = np.sqrt(np.abs(new_e) ** 2 + np.abs(new_g) ** 2)
            psi[:, 0] = new_e / norm
            psi[:, 1] = new_g / norm

            u_now = 0.5 * p.omega0 * (np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2)
            w += dw_k
            qcl += dqcl_k
            if k >= k0:
                w_win += dw_k
                qcl_win += dqcl_k
                qq_win += (u_now - u_prev) - dw_k - dqcl_k
            for i in range(cap):
                lab = "emit" if em[i] else ("absorb" if ab[i] else "nojump")
                dqq_i = (u_now[i] - u_prev[i]) - dw_k[i] - dqcl_k[i]
                dis_i = -dqcl_k[i] / temp if temp is not None else math.nan
                row(i, k + 1, lab, dw_k[i], dqcl_k[i], dqq_i, dis_i)
            u_prev = u_now
            if k + 1 in record_steps:
                states[k + 1] = np.einsum("bi,bj->ij", psi, psi.conj())

        pe_fin = np.abs(psi[:, 0]) ** 2
        m_e = u_fin < pe_fin
        u_fin_energy = np.where(m_e, 0.5 * p.omega0, -0.5 * p.omega0)
        du = u_fin_energy - u0
        qq = du - w - qcl
        qq_win += u_fin_energy - u_prev  # final collapse heat lands in the window
        for i in range(cap):
            psi[i, 0] = 1.0 if m_e[i] else 0.0
            psi[i, 1] = 0.0 if m_e[i] else 1.0
            lab = "final:e" if m_e[i] else "final:g"
            dis_i = (
                -math.log(pp[0] if m_e[i] else pp[1]) if temp is not None else math.nan
            )
            row(i, steps + 1, lab, 0.0, 0.0, u_fin_energy[i] - u_prev[i],
                dis_i, t=steps * dt)
        return dict(
            w=w, qcl=qcl, qq=qq, du=du,
            w_win=w_win, qcl_win=qcl_win, qq_win=qq_win,
            l_e=l_e, m_e=m_e, states=states, rows=rows,
        )

    parts = _run_blocks(n_traj, block, workers)
    w = np.concatenate([r["w"] for r in parts])
    qcl = np.concatenate([r["qcl"] for r in parts])
    qq = np.concatenate([r["qq"] for r in parts])
    du = np.concatenate([r["du"] for r in parts])
    l_e = np.concatenate([r["l_e"] for r in parts])
    m_e = np.concatenate([r["m_e"] for r in parts])
    w_win = np.concatenate([r["w_win"] for r in parts])
    qcl_win = np.concatenate([r["qcl_win"] for r in parts])
    qq_win = np.concatenate([r["qq_win"] for r in parts])

    mean_states = {}
    for k in record_steps:
        acc = np.zeros((2, 2), dtype=complex)
        for r in parts:
            acc = acc + r["states"][k]
        mean_states[k] = acc / n_traj

    entropy = jarzynski = None
    if temp is not None:
        if 0.0 < pe_init < 1.0:
            lp_init = np.where(l_e, math.log(pe_init), math.log(1.0 - pe_init))
        else:
            lp_init = np.zeros(n_traj)
        lp_fin = np.where(m_e, math.log(pp[0]), math.log(pp[1]))
        entropy = lp_init - lp_fin - qcl / temp
        jarzynski = np.exp(-(w + qq) / temp)

    return FluorescenceRun(
        params=p,
        times=grid,
        w=w,
        qcl=qcl,
        qq=qq,
        du=du,
        l_init=np.where(l_e, 0, 1),
        m_final=np.where(m_e, 0, 1),
        flux_w=thermo.mean_and_se(w_win / window),
        flux_qcl=thermo.mean_and_se(qcl_win / window),
        flux_qq=thermo.mean_and_se(qq_win / window),
        mean_states=mean_states,
        entropy=entropy,
        jarzynski=jarzynski,
        master_final=master_final,
        seed=seed,
        ledger_rows=[r for part in parts for r in part["rows"]],
    )


# ---------------------------------------------------------------------------
# Example 3: continuous sigma_z monitoring through a cavity meter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonitorParams:
    """Continuous weak sigma_z measurement.

    gamma_m is the dephasing-model rate: the ensemble obeys
    d rho/dt = -i[H, rho] + 2 gamma_m (sigma_z rho sigma_z - rho), so the
    coherence decays at 4 gamma_m. The per-step Kraus strength is
    kappa = 2 gamma_m (the readout Gaussians around I = +-1 have variance
    1 / (2 kappa dt)).
    """

    omega0: float
    gamma_m: float
    dt: float

    def __post_init__(self):
        if self.gamma_m <= 0 or self.dt <= 0:
            raise ParameterError("need gamma_m > 0 and dt > 0")
        if self.gamma_m * self.dt > 0.05:
            raise ParameterError(
                f"gamma_m*dt = {self.gamma_m * self.dt:.3g} exceeds 0.05"
            )

    @property
    def kappa(self) -> float:
        return 2.0 * self.gamma_m


def monitor_model(p: MonitorParams) -> LindbladModel:
    """Dephasing Lindblad model matching the monitoring ensemble average."""
    l_op = math.sqrt(2.0 * p.gamma_m) * SIGMA_Z
    return LindbladModel(
        h_of_lambda=lambda lam: 0.5 * p.omega0 * SIGMA_Z,
        jumps=[lambda lam: l_op],
        dt=p.dt,
    )


def outcome_density(p: MonitorParams, pe: np.ndarray, i_vals: np.ndarray, y_vals: np.ndarray) -> np.ndarray:
    """Two-Gaussian outcome law P(y, I) of the meter readout."""
    kdt = p.kappa * p.dt
    return (
        np.sqrt(kdt) / np.pi
        * np.exp(-(y_vals**2))
        * (pe * np.exp(-kdt * (i_vals - 1.0) ** 2)
           + (1.0 - pe) * np.exp(-kdt * (i_vals + 1.0) ** 2))
    )


@dataclass
class MonitoringRun:
    params: MonitorParams
    times: np.ndarray
    qq: np.ndarray  # per-trajectory quantum heat totals
    dis: np.ndarray  # per-trajectory entropy production totals
    dqq_steps: np.ndarray  # flattened per-step quantum heat increments
    mean_z: np.ndarray  # ensemble <sigma_z> per time
    mean_coherence: np.ndarray  # ensemble <e| rho |g> per time
    i_samples: np.ndarray  # readouts of the first step
    y_samples: np.ndarray
    seed: int
    ledger_rows: list = field(default_factory=list)

    def summary(self) -> EnsembleSummary:
        mqq, se_qq = thermo.mean_and_se(self.qq)
        ms, se_s = thermo.mean_and_se(self.dis)
        mdqq, se_dqq = thermo.mean_and_se(self.dqq_steps)
        return EnsembleSummary(
            mean_w=0.0,
            mean_qcl=0.0,
            mean_qq=mqq,
            mean_entropy=ms,
            ift_value=float("nan"),
            lambda_abs=0.0,
            std_errors={"Qq": se_qq, "entropy": se_s, "dQq_step": se_dqq},
            n_traj=len(self.qq),
            seed=self.seed,
            extra={
                "mean_dQq_step": mdqq,
                "dt": self.params.dt,
                "entropy_floor_term": math.log(
                    math.pi / math.sqrt(self.params.kappa * self.params.dt)
                ),
                "mode": "sample",
            },
        )


def run_monitoring(
    p: MonitorParams,
    n_traj: int,
    steps: int,
    seed: int,
    psi0: np.ndarray | None = None,
    workers: int = 1,
    ledger_upto: int = 0,
) -> MonitoringRun:
    """Diffusive ensemble with exact Born sampling of the meter readout.

    Per step: the readout branch follows the populations, I is Gaussian
    around the branch center, y is the meter-phase noise; the exact Kraus
    operator (diagonal in the energy basis) updates the state, so the
    ensemble reproduces the dephasing master equation with no dt truncation.
    Work and classical heat are identically zero (no drive, no thermal
    reservoir); quantum heat is the closure residual and the per-step
    entropy production is -ln P(y, I).
    """
    if psi0 is None:
        psi0 = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    psi0 = linalg.ket(psi0)
    kdt = p.kappa * p.dt
    sig_i = 1.0 / math.sqrt(2.0 * kdt)
    sig_y = 1.0 / math.sqrt(2.0)
    half_rot = np.exp(-0.5j * p.omega0 * p.dt)

    def block(a: int, b: int):
        nb = b - a
        u = np.empty((nb, steps))
        gi = np.empty((nb, steps))
        gy = np.empty((nb, steps))
        for i in range(nb):
            rng = traj_rng(seed, a + i)
            u[i] = rng.random(steps)
            gi[i] = rng.standard_normal(steps)
            gy[i] = rng.standard_normal(steps)
        psi = np.tile(psi0, (nb, 1))
        dis = np.zeros(nb)
        z0 = np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2
        z_prev = z0.copy()
        dqq = np.empty((nb, steps))
        mean_z = np.empty(steps + 1)
        mean_coh = np.empty(steps + 1, dtype=complex)
        mean_z[0] = z_prev.sum()
        mean_coh[0] = (psi[:, 0] * np.conj(psi[:, 1])).sum()
        i_first = np.empty(nb)
        y_first = np.empty(nb)
        cap = max(0, min(b, ledger_upto) - a)
        rows = []
        for i in range(cap):
            rows.append([
                a + i, 0, 0.0, "init",
                psi[i, 0].real, psi[i, 0].imag, psi[i, 1].real, psi[i, 1].imag,
                0.0, 0.0, 0.0, 0.0,
            ])

        for k in range(steps):
            pe = np.abs(psi[:, 0]) ** 2
            center = np.where(u[:, k] < pe, 1.0, -1.0)
            i_k = center + sig_i * gi[:, k]
            y_k = sig_y * gy[:, k]
            if k == 0:
                i_first[:] = i_k
                y_first[:] = y_k
            dis_k = -np.log(outcome_density(p, pe, i_k, y_k))
            dis += dis_k

            phase = np.exp(-1j * y_k * math.sqrt(kdt))
            ae = np.exp(-0.5 * kdt * (i_k - 1.0) ** 2) * phase * half_rot
            ag = np.exp(-0.5 * kdt * (i_k + 1.0) ** 2) / (phase * half_rot)
            psi[:, 0] *= ae
            psi[:, 1] *= ag
            norm = np.sqrt(np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, 1]) ** 2)
            psi /= norm[:, None]

            z_now = np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2
            dqq[:, k] = 0.5 * p.omega0 * (z_now - z_prev)
            z_prev = z_now
            mean_z[k + 1] = z_now.sum()
            mean_coh[k + 1] = (psi[:, 0] * np.conj(psi[:, 1])).sum()
            for i in range(cap):
                rows.append([
                    a + i, k + 1, (k + 1) * p.dt,
                    f"I={i_k[i]:.9g}|y={y_k[i]:.9g}",
                    psi[i, 0].real, psi[i, 0].imag,
                    psi[i, 1].real, psi[i, 1].imag,
                    0.0, 0.0, dqq[i, k], dis_k[i],
                ])

        qq = 0.5 * p.omega0 * (z_prev - z0)
        return dict(
            qq=qq, dis=dis, dqq=dqq.ravel(), mean_z=mean_z, mean_coh=mean_coh,
            i_first=i_first, y_first=y_first, rows=rows,
        )

    parts = _run_blocks(n_traj, block, workers)
    mean_z = sum(r["mean_z"] for r in parts) / n_traj
    mean_coh = sum(r["mean_coh"] for r in parts) / n_traj
    return MonitoringRun(
        params=p,
        times=np.arange(steps + 1) * p.dt,
        qq=np.concatenate([r["qq"] for r in parts]),
        dis=np.concatenate([r["dis"] for r in parts]),
        dqq_steps=np.concatenate([r["dqq"] for r in parts]),
        mean_z=mean_z,
        mean_coherence=mean_coh,
        i_samples=np.concatenate([r["i_first"] for r in parts]),
        y_samples=np.concatenate([r["y_first"] for r in parts]),
        seed=seed,
        ledger_rows=[r for part in parts for r in part["rows"]],
    )
