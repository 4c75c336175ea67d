import numpy as np
import pytest

from trajtherm import linalg
from trajtherm.channels import (
    Dilation,
    KrausSet,
    coarse_grain,
    kraus_from_dilation,
    reverse_kraus,
)
from trajtherm.errors import (
    DivisionByZeroOutcome,
    InvalidState,
    NotCoarseGrainable,
    UnitarityError,
)
from trajtherm.unravel import LindbladModel, qj_kraus

SM = np.array([[0, 0], [1, 0]], dtype=complex)  # lowering, index 0 = excited
SP = SM.conj().T
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def random_density(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_kraus_set_validates_cptp():
    KrausSet(dim=2, ops=(("id", np.eye(2, dtype=complex)),))
    with pytest.raises(UnitarityError):
        KrausSet(dim=2, ops=(("bad", 0.5 * np.eye(2, dtype=complex)),))


def test_kraus_set_apply_and_probs():
    g = 0.3
    ops = (
        ("decay", np.sqrt(g) * SM),
        ("stay", np.diag([np.sqrt(1 - g), 1.0]).astype(complex)),
    )
    k = KrausSet(dim=2, ops=ops)
    rho = np.diag([1.0, 0.0]).astype(complex)
    out = k.apply(rho)
    assert np.allclose(out, np.diag([1 - g, g]))
    probs = k.outcome_probs(rho)
    assert np.isclose(probs["decay"], g) and np.isclose(probs["stay"], 1 - g)


def test_kraus_from_dilation_identity():
    d = Dilation(
        v=np.eye(2, dtype=complex),
        rho_env=np.array([[1.0]], dtype=complex),
        dim_sys=2,
        dim_env=1,
    )
    k = kraus_from_dilation(d)
    assert len(k.ops) == 1
    label, m = k.ops[0]
    assert np.allclose(np.abs(m), np.eye(2))


def test_kraus_from_dilation_swap_fresh_env():
    env = np.diag([1.0, 0.0]).astype(complex)  # env pure |0>
    d = Dilation(v=SWAP, rho_env=env, dim_sys=2, dim_env=2)
    k = kraus_from_dilation(d)
    rng = np.random.default_rng(5)
    for _ in range(5):
        rho = random_density(rng, 2)
        assert np.max(np.abs(k.apply(rho) - env)) < 1e-12


def test_kraus_from_dilation_matches_partial_trace():
    rng = np.random.default_rng(6)
    v = random_unitary(rng, 4)
    env = random_density(rng, 2)
    d = Dilation(v=v, rho_env=env, dim_sys=2, dim_env=2)
    k = kraus_from_dilation(d)
    for _ in range(100):
        rho = random_density(rng, 2)
        direct = linalg.partial_trace(
            v @ np.kron(rho, env) @ v.conj().T, (2, 2), "system"
        )
        assert np.max(np.abs(k.apply(rho) - direct)) < 1e-10


def test_dilation_rejects_non_unitary():
    with pytest.raises(UnitarityError):
        Dilation(
            v=np.ones((4, 4), dtype=complex),
            rho_env=0.5 * np.eye(2, dtype=complex),
            dim_sys=2,
            dim_env=2,
        )


def test_reverse_unitary_channel_is_inverse():
    rng = np.random.default_rng(7)
    u = random_unitary(rng, 2)
    k = KrausSet(dim=2, ops=(("u", u),))
    rev = reverse_kraus(k, {"u": 1.0}, {"u": 1.0})
    assert np.allclose(rev.op("u") @ k.op("u"), np.eye(2))


def test_reverse_kraus_thermal_qj_swaps_jump_operators():
    # photon-counting step at temperature T: the reversed emission operator
    # is the absorption operator up to O((gamma dt)^2), and vice versa
    gamma, nbar, dt, omega0 = 1.0, 0.4, 1e-3, 1.0
    temp = omega0 / np.log(1 + 1 / nbar)
    gm, gp = gamma * (nbar + 1), gamma * nbar
    model = LindbladModel(
        h_of_lambda=lambda lam: 0.5 * omega0 * np.diag([1.0, -1.0]).astype(complex),
        jumps=[lambda lam: np.sqrt(gm) * SM, lambda lam: np.sqrt(gp) * SP],
        dt=dt,
    )
    k = qj_kraus(model, 0.0)
    # detailed-balance weights: the backward/forward ratio for a jump that
    # deposits heat dQcl in the reservoir is e^{dQcl/T}
    boltz = np.exp(-omega0 / temp)  # = nbar/(nbar+1)
    q_fwd = {"nojump": 1.0, "jump:0": 1.0, "jump:1": 1.0}
    q_bwd = {"nojump": 1.0, "jump:0": boltz, "jump:1": 1.0 / boltz}
    tol = 10 * (gamma * (2 * nbar + 1) * dt) ** 2
    rev = reverse_kraus(k, q_fwd=q_fwd, q_bwd=q_bwd, tol_cptp=tol + 1e-12)
    # reversed emission equals absorption exactly, and vice versa
    assert np.max(np.abs(rev.op("jump:0") - k.op("jump:1"))) < 1e-14
    assert np.max(np.abs(rev.op("jump:1") - k.op("jump:0"))) < 1e-14
    assert np.max(np.abs(rev.op("nojump") - k.op("nojump").conj().T)) < 1e-14


def test_reverse_kraus_double_reversal_and_zero_prob():
    rng = np.random.default_rng(8)
    u = random_unitary(rng, 2)
    ops = (("a", np.sqrt(0.25) * u), ("b", np.sqrt(0.75) * u))
    k = KrausSet(dim=2, ops=ops)
    q_fwd = {"a": 0.25, "b": 0.75}
    q_bwd = {"a": 0.4, "b": 0.6}
    rev = reverse_kraus(k, q_fwd, q_bwd)
    back = reverse_kraus(rev, q_bwd, q_fwd)
    for label in ("a", "b"):
        assert np.max(np.abs(back.op(label) - k.op(label))) < 1e-12
    with pytest.raises(DivisionByZeroOutcome):
        reverse_kraus(k, {"a": 0.0, "b": 1.0}, q_bwd)


def test_coarse_grain_singletons_identity():
    g = 0.3
    ops = (
        ("decay", np.sqrt(g) * SM),
        ("stay", np.diag([np.sqrt(1 - g), 1.0]).astype(complex)),
    )
    k = KrausSet(dim=2, ops=ops)
    grouped = coarse_grain(k, {"d": ["decay"], "s": ["stay"]})
    rng = np.random.default_rng(9)
    for _ in range(10):
        rho = random_density(rng, 2)
        assert np.max(np.abs(grouped.apply(rho) - k.apply(rho))) < 1e-12
    for new, old in (("d", "decay"), ("s", "stay")):
        m_new, m_old = grouped.op(new), k.op(old)
        # equal up to a global phase
        ratio = m_new[np.abs(m_old) > 1e-12] / m_old[np.abs(m_old) > 1e-12]
        assert np.allclose(ratio, ratio[0]) and np.isclose(abs(ratio[0]), 1.0)


def test_coarse_grain_thermal_dilation_reproduces_qj_grouping():
    # microscopic (mu, nu) labels of a weak-coupling thermal step group by
    # excitation change into jump-type operators proportional to sigma_-,
    # sigma_+, and a no-jump drift
    dt, gamma = 1e-3, 1.0
    theta = np.sqrt(gamma * dt)
    gen = np.kron(SM, SP) + np.kron(SP, SM)
    w, vv = np.linalg.eigh(gen)
    v = (vv * np.exp(-1j * theta * w)) @ vv.conj().T
    env = np.diag([0.0, 1.0]).astype(complex)  # env ground state (T = 0)
    d = Dilation(v=v, rho_env=env, dim_sys=2, dim_env=2)
    k = kraus_from_dilation(d)
    live = [lab for lab in k.labels() if np.max(np.abs(k.op(lab))) > 1e-12]
    emit = [lab for lab in live if lab[0] != lab[1]]
    stay = [lab for lab in live if lab[0] == lab[1]]
    grouped = coarse_grain(k, {"emit": emit, "stay": stay}, tol_prop=1e-8)
    m_emit = grouped.op("emit")
    # emission operator proportional to sigma_- with weight ~ sqrt(gamma dt)
    assert abs(m_emit[0, 0]) + abs(m_emit[0, 1]) + abs(m_emit[1, 1]) < 1e-12
    assert np.isclose(abs(m_emit[1, 0]), np.sin(theta), atol=1e-12)
    rng = np.random.default_rng(10)
    for _ in range(50):
        rho = random_density(rng, 2)
        assert np.max(np.abs(grouped.apply(rho) - k.apply(rho))) < 1e-10


def test_coarse_grain_rejects_non_proportional_members():
    g = 0.3
    ops = (
        ("decay", np.sqrt(g) * SM),
        ("stay", np.diag([np.sqrt(1 - g), 1.0]).astype(complex)),
    )
    k = KrausSet(dim=2, ops=ops)
    with pytest.raises(NotCoarseGrainable):
        coarse_grain(k, {"all": ["decay", "stay"]})


def test_cptp_closure_of_constructed_sets():
    rng = np.random.default_rng(11)
    for _ in range(20):
        v = random_unitary(rng, 4)
        env = random_density(rng, 2)
        k = kraus_from_dilation(Dilation(v=v, rho_env=env, dim_sys=2, dim_env=2))
        assert k.cptp_defect() < 1e-10
