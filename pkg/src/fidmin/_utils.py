"""Shared tolerances, seeding and input validation."""
from __future__ import annotations

import hashlib

import numpy as np

# Numerical tolerances used throughout the package.
NORM_TOL = 1e-12
HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
TP_TOL = 1e-8
COEF_CUTOFF = 1e-12


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        if label < 0:
            raise ValueError("integer stream labels must be nonnegative")
        return int(label)
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def split_seed(seed: int, *labels) -> int:
    """Derive a 64-bit child seed from ``seed`` and a tuple of stream labels.

    Labels may be nonnegative ints or strings; strings are hashed with
    SHA-256 so the mapping is stable across processes and platforms.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_label_to_int(x) for x in labels))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def child_rng(seed: int, *labels) -> np.random.Generator:
    """Generator for the stream ``(seed, *labels)``."""
    return np.random.default_rng(split_seed(seed, *labels))


def check_random_state(rng) -> np.random.Generator:
    """Accept ``None``, an int seed or a Generator and return a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a Generator from {type(rng).__name__}")


def num_qubits(d: int) -> int:
    n = int(round(np.log2(d)))
    if d < 2 or 2**n != d:
        raise ValueError(f"dimension {d} is not a power of 2")
    return n


def check_square(M, name="matrix") -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def check_state_vector(psi, dim=None) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    num_qubits(psi.shape[0])
    if dim is not None and psi.shape[0] != dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {dim}")
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL * 10:
        raise ValueError("state vector is not normalized")
    return psi


def check_density_matrix(rho, dim=None) -> np.ndarray:
    rho = check_square(np.asarray(rho, dtype=complex), "density matrix")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if np.abs(rho - rho.conj().T).max() > HERM_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho
