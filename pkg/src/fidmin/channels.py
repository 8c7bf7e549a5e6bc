"""Quantum channels in Kraus form, Choi states and random channel ensembles.

Choi convention: ``J = (1/d) sum_ij |i><j| (x) E(|i><j|)``, i.e. the input
copy is the left tensor factor and the channel output the right one.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ._utils import (
    PSD_TOL,
    TP_TOL,
    TRACE_TOL,
    check_density_matrix,
    check_random_state,
    num_qubits,
)
from .quantum import haar_random_unitary, pauli_stack


class QuantumChannel:
    """A CPTP map held as a list of Kraus operators.

    Parameters
    ----------
    kraus : sequence of (d, d) arrays
        Kraus operators ``E_j`` with ``sum_j E_j^dag E_j = I``.
    check : bool
        Verify trace preservation on construction.
    """

    def __init__(self, kraus, check=True):
        K = np.array(kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0 or K.shape[1] != K.shape[2]:
            raise ValueError("Kraus operators must be a nonempty stack of square matrices")
        num_qubits(K.shape[1])
        if check:
            dev = np.abs(np.einsum("kji,kjl->il", K.conj(), K) - np.eye(K.shape[1])).max()
            if dev > TP_TOL:
                raise ValueError(f"Kraus operators are not trace preserving (deviation {dev:.2e})")
        K.setflags(write=False)
        self._kraus = K

    @property
    def kraus(self) -> np.ndarray:
        return self._kraus

    @property
    def dim(self) -> int:
        return self._kraus.shape[1]

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.dim)

    @cached_property
    def choi(self) -> np.ndarray:
        d = self.dim
        # J[(i,a),(j,b)] = (1/d) sum_k E_k[a,i] conj(E_k[b,j])
        J = np.einsum("kai,kbj->iajb", self._kraus, self._kraus.conj()).reshape(d * d, d * d) / d
        J.setflags(write=False)
        return J

    def __call__(self, rho):
        return apply(self, rho)

    def __repr__(self):
        return f"QuantumChannel(dim={self.dim}, n_kraus={self._kraus.shape[0]})"

    @classmethod
    def from_choi(cls, J, tol=PSD_TOL):
        """Kraus form of a Choi state via its eigendecomposition."""
        J = check_choi(J, tol=max(tol, TP_TOL))
        d = int(round(np.sqrt(J.shape[0])))
        w, V = np.linalg.eigh((J + J.conj().T) / 2)
        keep = w > tol
        # eigenvector v[(i,a)] of J gives E[a,i] = sqrt(d w) v[(i,a)]
        K = (np.sqrt(d * w[keep])[:, None] * V[:, keep].T).reshape(-1, d, d).transpose(0, 2, 1)
        return cls(K, check=False)

    def compose(self, first: "QuantumChannel") -> "QuantumChannel":
        """Channel ``self o first`` (apply ``first``, then ``self``)."""
        if first.dim != self.dim:
            raise ValueError("dimension mismatch")
        K = np.einsum("aij,bjk->abik", self._kraus, first.kraus).reshape(-1, self.dim, self.dim)
        return QuantumChannel(K, check=False)


def apply(channel: QuantumChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.dim, channel.dim):
        raise ValueError(f"input of shape {rho.shape} does not match channel dimension {channel.dim}")
    K = channel.kraus
    return np.einsum("kij,jl,kml->im", K, rho, K.conj())


def apply_pure(channel: QuantumChannel, psi) -> np.ndarray:
    """``E(|psi><psi|)`` without forming the input density matrix."""
    v = channel.kraus @ np.asarray(psi, dtype=complex)
    return v.T @ v.conj()


def choi(channel: QuantumChannel) -> np.ndarray:
    return channel.choi


def partial_trace_output(J) -> np.ndarray:
    """Trace over the output factor of a ``d^2 x d^2`` Choi matrix."""
    d = int(round(np.sqrt(J.shape[0])))
    return np.einsum("iaja->ij", np.asarray(J).reshape(d, d, d, d))


def check_choi(J, tol=TP_TOL) -> np.ndarray:
    """Validate a Choi state: Hermitian, unit trace, PSD, trace preserving."""
    J = np.asarray(J, dtype=complex)
    d = int(round(np.sqrt(J.shape[0])))
    if J.shape != (d * d, d * d):
        raise ValueError(f"Choi matrix must be d^2 x d^2, got {J.shape}")
    if np.abs(J - J.conj().T).max() > tol:
        raise ValueError("Choi matrix is not Hermitian")
    if abs(np.trace(J) - 1) > max(tol, TRACE_TOL):
        raise ValueError("Choi matrix does not have unit trace")
    if np.linalg.eigvalsh((J + J.conj().T) / 2).min() < -tol:
        raise ValueError("Choi matrix is not positive semidefinite (map not CP)")
    if np.abs(partial_trace_output(J) - np.eye(d) / d).max() > tol:
        raise ValueError("Choi matrix is not trace preserving")
    return J


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel(np.eye(d)[None])


def unitary_channel(U) -> QuantumChannel:
    return QuantumChannel(np.asarray(U)[None])


def erasure_channel(d: int) -> QuantumChannel:
    """Completely depolarizing map ``rho -> tr(rho) I/d``."""
    E = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            E[i * d + j, i, j] = 1 / np.sqrt(d)
    return QuantumChannel(E)


def depolarizing_channel(d: int, p: float) -> QuantumChannel:
    """``(1 - p) rho + p tr(rho) I/d`` in the Pauli-Kraus form."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    n = num_qubits(d)
    probs = np.full(d * d, p / d**2)
    probs[0] += 1 - p
    return pauli_channel(probs, n)


def pauli_channel(probs, n: int) -> QuantumChannel:
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (4**n,) or probs.min() < 0 or abs(probs.sum() - 1) > 1e-12:
        raise ValueError("Pauli probabilities must be a distribution over 4**n entries")
    W = pauli_stack(n)
    keep = probs > 0
    return QuantumChannel(np.sqrt(probs[keep])[:, None, None] * W[keep])


def noise_channel(U, noisy_gate: QuantumChannel) -> QuantumChannel:
    """Noise process ``G^{-1} o G~`` for ideal unitary ``U``; Kraus ``U^dag F_j``."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (noisy_gate.dim, noisy_gate.dim):
        raise ValueError("dimension mismatch between U and the noisy gate")
    if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > 1e-8:
        raise ValueError("ideal gate is not unitary")
    return QuantumChannel(U.conj().T @ noisy_gate.kraus)


def random_hs_channel(n: int, rng=None) -> QuantumChannel:
    """Class-HS channel: ``tr_A(U (. (x) |0><0|_A) U^dag)`` with Haar ``U`` on d^2 dims.

    The system is the left tensor factor; Kraus ``E_j = (I (x) <j|) U (I (x) |0>)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = check_random_state(rng)
    d = 2**n
    U = haar_random_unitary(d * d, rng).reshape(d, d, d, d)  # [s_out, a_out, s_in, a_in]
    K = U[:, :, :, 0].transpose(1, 0, 2)  # K[j] = U[:, j, :, 0]
    return QuantumChannel(K)


def uniform_simplex(k: int, rng) -> np.ndarray:
    """Flat draw from the probability simplex with ``k`` entries."""
    e = rng.standard_exponential(k)
    return e / e.sum()


def random_pauli_channel(n: int, rng=None, u_max: float = 0.1) -> QuantumChannel:
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < u_max <= 1:
        raise ValueError("u_max must lie in (0, 1]")
    rng = check_random_state(rng)
    d2 = 4**n
    q = uniform_simplex(d2 - 1, rng)
    u = rng.uniform(0.0, u_max)
    probs = np.empty(d2)
    probs[1:] = u * q
    probs[0] = 1 - probs[1:].sum()
    return pauli_channel(probs, n)


def amplitude_damping_from_basis(basis, gammas) -> QuantumChannel:
    """Decay towards ``basis[:, 0]`` with rates ``gammas`` (``gammas[0]`` must be 0)."""
    basis = np.asarray(basis, dtype=complex)
    gammas = np.asarray(gammas, dtype=float)
    d = basis.shape[0]
    if gammas.shape != (d,) or gammas[0] != 0 or gammas.min() < 0 or gammas.max() > 1:
        raise ValueError("need d damping rates in [0, 1] with gamma_0 = 0")
    E0 = (basis * np.sqrt(1 - gammas)) @ basis.conj().T
    ops = [E0]
    for j in range(1, d):
        ops.append(np.sqrt(gammas[j]) * np.outer(basis[:, 0], basis[:, j].conj()))
    return QuantumChannel(ops)


def random_amplitude_damping(n: int, rng=None, gamma_max: float = 0.1):
    """Random-basis amplitude damping; also returns the basis and the rates.

    Returns
    -------
    channel, basis, gammas
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = check_random_state(rng)
    d = 2**n
    basis = haar_random_unitary(d, rng)
    gammas = np.zeros(d)
    gammas[1] = gamma_max
    gammas[2:] = rng.uniform(0.0, gamma_max, size=d - 2)
    return amplitude_damping_from_basis(basis, gammas), basis, gammas


def class_pa_channel(n: int, rng=None) -> QuantumChannel:
    """Weak random Pauli noise followed by random amplitude damping (raw Kraus product)."""
    rng = check_random_state(rng)
    pauli = random_pauli_channel(n, rng)
    ad, _, _ = random_amplitude_damping(n, rng)
    return ad.compose(pauli)


def erasure_family(d: int, p: float, eta_z: float):
    """Choi states of ``(1-p) I + p D`` and ``(1-p) I + p D'``,
    where ``D'(X) = D(X) - eta_z Z <0|X|0>``.

    The pair has ``|F'_min - F_min| = d * trace_norm(J' - J) = p * eta_z``.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    num_qubits(d)
    phi = np.eye(d).reshape(-1) / np.sqrt(d)
    J_id = np.outer(phi, phi).astype(complex)
    J = (1 - p) * J_id + p * np.eye(d * d) / d**2
    Zd = np.zeros((d, d))
    Zd[0, 0], Zd[1, 1] = 1.0, -1.0
    P0 = np.zeros((d, d))
    P0[0, 0] = 1.0
    J_prime = J - (p * eta_z / d) * np.kron(P0, Zd)
    for M in (J, J_prime):
        if np.linalg.eigvalsh(M).min() < -PSD_TOL:
            raise ValueError("parameters give a map that is not completely positive")
    return J, J_prime


def channel_from_any(obj) -> QuantumChannel:
    if isinstance(obj, QuantumChannel):
        return obj
    return QuantumChannel.from_choi(obj)


__all__ = [
    "QuantumChannel",
    "apply",
    "apply_pure",
    "choi",
    "check_choi",
    "check_density_matrix",
    "partial_trace_output",
    "identity_channel",
    "unitary_channel",
    "erasure_channel",
    "depolarizing_channel",
    "pauli_channel",
    "noise_channel",
    "random_hs_channel",
    "random_pauli_channel",
    "random_amplitude_damping",
    "amplitude_damping_from_basis",
    "class_pa_channel",
    "erasure_family",
]
