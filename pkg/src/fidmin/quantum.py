"""Linear algebra on qubit registers: Pauli basis, Haar sampling, tetrahedron
states and the real parameterization of pure states."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._utils import (
    HERM_TOL,
    NORM_TOL,
    check_density_matrix,
    check_random_state,
    check_square,
    check_state_vector,
    num_qubits,
)

PAULI_LABELS = "IXYZ"

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE_QUBIT_PAULIS = np.stack([_I2, _X, _Y, _Z])

# Regular tetrahedron inscribed in the Bloch sphere.
TETRAHEDRON_VECTORS = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / np.sqrt(3)


def pauli_label(k: int, n: int) -> str:
    """Return the I/X/Y/Z string of the 1-based Pauli index ``k``.

    The first character belongs to the leftmost tensor factor.
    """
    if not 1 <= k <= 4**n:
        raise ValueError(f"Pauli index {k} out of range [1, {4**n}]")
    digits = np.base_repr(k - 1, base=4).rjust(n, "0")
    return "".join(PAULI_LABELS[int(c)] for c in digits)


def pauli_index(label: str) -> int:
    """Inverse of :func:`pauli_label`."""
    k = 0
    for c in label.upper():
        k = 4 * k + PAULI_LABELS.index(c)
    return k + 1


def pauli_operator(k: int, n: int) -> np.ndarray:
    """Tensor product of single-qubit Paulis for the 1-based index ``k``."""
    out = np.ones((1, 1), dtype=complex)
    for c in pauli_label(k, n):
        out = np.kron(out, SINGLE_QUBIT_PAULIS[PAULI_LABELS.index(c)])
    return out


@lru_cache(maxsize=8)
def pauli_stack(n: int) -> np.ndarray:
    """All ``4**n`` Pauli operators, shape ``(4**n, 2**n, 2**n)``, index k-1."""
    out = np.ones((1, 1, 1), dtype=complex)
    for _ in range(n):
        out = np.einsum("aij,bkl->abikjl", out, SINGLE_QUBIT_PAULIS).reshape(
            out.shape[0] * 4, out.shape[1] * 2, out.shape[2] * 2
        )
    out.setflags(write=False)
    return out


def pauli_coefficient(k: int, tau) -> float:
    """Coefficient ``tr(W_k tau)/sqrt(d)`` of ``tau`` in the normalized Pauli basis."""
    tau = check_square(np.asarray(tau, dtype=complex), "operator")
    d = tau.shape[0]
    n = num_qubits(d)
    val = np.trace(pauli_operator(k, n) @ tau) / np.sqrt(d)
    if abs(val.imag) > HERM_TOL:
        raise ValueError("operator is not Hermitian: coefficient has imaginary part")
    return float(val.real)


def pauli_coefficients(tau) -> np.ndarray:
    """All Pauli-basis coefficients of a Hermitian operator, in index order."""
    tau = check_square(np.asarray(tau, dtype=complex), "operator")
    d = tau.shape[0]
    W = pauli_stack(num_qubits(d))
    # tr(W_k tau) = sum_ij W_k[i, j] tau[j, i]
    return np.einsum("kij,ji->k", W, tau).real / np.sqrt(d)


def pauli_coefficients_pure(psi) -> np.ndarray:
    """Pauli-basis coefficients ``<psi|W_k|psi>/sqrt(d)`` of a pure state."""
    psi = np.asarray(psi, dtype=complex)
    W = pauli_stack(num_qubits(psi.shape[0]))
    return np.einsum("i,kij,j->k", psi.conj(), W, psi).real / np.sqrt(psi.shape[0])


def from_pauli_coefficients(x) -> np.ndarray:
    """Rebuild an operator from its normalized Pauli-basis coefficients."""
    x = np.asarray(x, dtype=float)
    n = num_qubits(int(round(np.sqrt(x.shape[0]))))
    d = 2**n
    return np.einsum("k,kij->ij", x, pauli_stack(n)) / np.sqrt(d)


def haar_random_state(d: int, rng=None) -> np.ndarray:
    if d < 2:
        raise ValueError("dimension must be at least 2")
    rng = check_random_state(rng)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def haar_random_unitary(D: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with the phase fix.

    The diagonal of R is made positive so that Q is exactly Haar (plain QR
    output is biased by the LAPACK sign convention).
    """
    if D < 2:
        raise ValueError("dimension must be at least 2")
    rng = check_random_state(rng)
    Z = (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    diag = np.diag(R)
    return Q * (diag / np.abs(diag))


def bloch_to_state(a) -> np.ndarray:
    """Single-qubit state vector with Bloch vector ``a`` (unit norm)."""
    x, y, z = a
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


@lru_cache(maxsize=8)
def tetrahedron_states(n: int) -> np.ndarray:
    """The ``4**n`` product tetrahedron states, shape ``(4**n, 2**n)``.

    Row order is lexicographic in the per-qubit indices, first qubit most
    significant.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    single = np.array([bloch_to_state(a) for a in TETRAHEDRON_VECTORS])
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.einsum("ai,bj->abij", out, single).reshape(out.shape[0] * 4, -1)
    out.setflags(write=False)
    return out


def param_to_state(ell) -> np.ndarray:
    """Map a real vector ``(Re z_1, Im z_1, Re z_2, ...)`` to the normalized state."""
    ell = np.asarray(ell, dtype=float)
    if ell.ndim != 1 or ell.shape[0] % 2:
        raise ValueError("parameter vector must have even length")
    z = ell[0::2] + 1j * ell[1::2]
    nrm = np.linalg.norm(z)
    if nrm <= NORM_TOL:
        raise ValueError("parameter vector is (numerically) zero")
    return z / nrm


def state_to_param(psi) -> np.ndarray:
    """A parameter vector representing ``psi`` (the interleaved real/imag parts)."""
    psi = np.asarray(psi, dtype=complex)
    out = np.empty(2 * psi.shape[0])
    out[0::2] = psi.real
    out[1::2] = psi.imag
    return out


def canonical_phase(psi) -> np.ndarray:
    """Fix the global phase so the first nonzero amplitude is real and positive."""
    psi = np.asarray(psi, dtype=complex)
    idx = np.flatnonzero(np.abs(psi) > NORM_TOL)
    if idx.size == 0:
        return psi.copy()
    a = psi[idx[0]]
    out = psi * (abs(a) / a)
    out[idx[0]] = abs(a)
    return out


def fidelity_pure_mixed(psi, rho) -> float:
    """Squared fidelity ``<psi|rho|psi>`` of a pure state with a density matrix."""
    psi = check_state_vector(psi)
    rho = check_density_matrix(rho, dim=psi.shape[0])
    val = float(np.real(psi.conj() @ rho @ psi))
    if val < -HERM_TOL or val > 1 + HERM_TOL:
        raise ValueError(f"fidelity {val} outside [0, 1]")
    return min(max(val, 0.0), 1.0)


def trace_norm(M) -> float:
    """Half the sum of singular values, so it doubles as the trace distance."""
    M = check_square(M)
    return 0.5 * float(np.linalg.svd(M, compute_uv=False).sum())


def random_density_matrix(d: int, rng=None, rank=None) -> np.ndarray:
    """Hilbert-Schmidt (or induced, if ``rank`` given) random density matrix."""
    rng = check_random_state(rng)
    k = d if rank is None else rank
    G = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real
