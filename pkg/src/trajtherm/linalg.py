"""Dense complex linear algebra for small Hilbert spaces, plus entropy functionals.

Conventions: hbar = k_B = 1; entropies in nats. Composite spaces are ordered
system (x) environment, i.e. the leftmost tensor factor is the system.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidState, ParameterError, SupportError

ATOL = 1e-10
PROB_FLOOR = 1e-14


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a^dag)/2."""
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= atol)


def ket(amplitudes, normalize: bool = False) -> np.ndarray:
    """Return a normalized complex state vector."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if normalize:
        if n == 0.0:
            raise InvalidState("cannot normalize the zero vector")
        return v / n
    if abs(n - 1.0) > ATOL:
        raise InvalidState(f"ket norm deviates from 1 by {abs(n - 1.0):.3e}")
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Validate Hermiticity, unit trace, and positivity of a density operator."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density operator must be square, got {rho.shape}")
    if not is_hermitian(rho, atol):
        raise InvalidState("density operator is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > max(atol, 1e-10):
        raise InvalidState(f"trace = {tr}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -atol:
        raise InvalidState(f"negative eigenvalue {w.min():.3e}")
    return rho


def eig_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a deterministic phase.

    Eigenvalues ascend; each eigenvector's first component of magnitude
    above 1e-12 is made real and positive.
    """
    if not is_hermitian(a, 1e-8):
        raise InvalidState("matrix is not Hermitian")
    w, v = np.linalg.eigh(hermitize(a))
    for j in range(v.shape[1]):
        col = v[:, j]
        idx = np.argmax(np.abs(col) > 1e-12)
        phase = col[idx] / abs(col[idx])
        v[:, j] = col * phase.conj()
    return w, v


def partial_trace(joint: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one factor of a system (x) environment operator.

    keep is "system" (traces the environment) or "env".
    """
    d_s, d_e = dims
    joint = np.asarray(joint, dtype=complex)
    if joint.shape != (d_s * d_e, d_s * d_e):
        raise DimensionError(
            f"joint operator is {joint.shape}, expected {(d_s * d_e, d_s * d_e)}"
        )
    t = joint.reshape(d_s, d_e, d_s, d_e)
    if keep == "system":
        return np.einsum("iaja->ij", t)
    if keep == "env":
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"keep must be 'system' or 'env', got {keep!r}")


def vn_entropy(rho: np.ndarray) -> float:
    """von Neumann entropy -tr[rho ln rho] in nats, with 0 ln 0 := 0."""
    if not is_hermitian(rho, ATOL):
        raise InvalidState("entropy of a non-Hermitian operator")
    w = np.linalg.eigvalsh(hermitize(rho))
    w = w[w > PROB_FLOOR]
    return float(-np.sum(w * np.log(w)))


def rel_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Quantum relative entropy D[rho || sigma] = tr[rho (ln rho - ln sigma)].

    Raises SupportError when rho has weight outside the support of sigma,
    which upstream code treats as an absolutely irreversible configuration.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionError("relative entropy of states with different dims")
    ws, vs = eig_hermitian(sigma)
    kernel = vs[:, ws <= PROB_FLOOR]
    if kernel.shape[1]:
        leak = float(np.real(np.einsum("ik,ij,jk->", kernel.conj(), rho, kernel)))
        if leak > 1e-10:
            raise SupportError(f"rho has weight {leak:.3e} outside supp(sigma)")
    supp = ws > PROB_FLOOR
    # tr[rho ln sigma] evaluated in sigma's eigenbasis
    diag = np.real(np.einsum("ik,ij,jk->k", vs[:, supp].conj(), rho, vs[:, supp]))
    tr_rho_lnsigma = float(np.sum(diag * np.log(ws[supp])))
    return -vn_entropy(rho) - tr_rho_lnsigma


def thermal_state(h: np.ndarray, temperature: float) -> np.ndarray:
    """Gibbs state exp(-H/T)/Z via eigendecomposition (k_B = 1)."""
    if temperature <= 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    w, v = eig_hermitian(h)
    x = np.exp(-(w - w.min()) / temperature)
    x /= x.sum()
    return hermitize((v * x) @ v.conj().T)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(1/2) tr |rho - sigma|."""
    w = np.linalg.eigvalsh(hermitize(rho - sigma))
    return 0.5 * float(np.sum(np.abs(w)))
