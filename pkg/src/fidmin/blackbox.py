"""Simulated laboratory: a hidden channel answering only shot-based queries.

Estimators receive a :class:`BlackBoxView`, which exposes the two
measurement families, the channel-use meter and the register size. One
channel use is one prepared input followed by one measurement shot.
"""
from __future__ import annotations

import numpy as np

from ._utils import check_random_state, num_qubits
from .channels import QuantumChannel, apply_pure
from .quantum import pauli_stack, tetrahedron_states


class NoisyGateBlackBox:
    """Owner of the hidden channel, the meter and the measurement generator.

    Not thread safe: one box belongs to one task.
    """

    def __init__(self, channel: QuantumChannel, rng=None):
        self._channel = channel
        self._rng = check_random_state(rng)
        self._uses = 0
        self._n = num_qubits(channel.dim)
        self._tetra_out = None

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return 2**self._n

    def uses(self) -> int:
        return self._uses

    def measure_pauli(self, psi, k, t):
        """Measure ``W_k`` on ``t`` fresh outputs ``E(psi)``; return the sum of the ±1 outcomes.

        ``k`` and ``t`` may be equal-length arrays, in which case each entry is an
        independent batch and an array of outcome sums is returned.
        """
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != (self.dim,):
            raise ValueError(f"input state must have dimension {self.dim}")
        scalar = np.ndim(k) == 0
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        t = np.atleast_1d(np.asarray(t, dtype=np.int64))
        if k.shape != t.shape:
            raise ValueError("k and t must have the same shape")
        if k.size and (k.min() < 1 or k.max() > 4**self._n):
            raise ValueError("Pauli index out of range")
        if np.any(k == 1):
            raise ValueError("identity Pauli index cannot be measured")
        if np.any(t < 1):
            raise ValueError("shot counts must be positive")
        rho = apply_pure(self._channel, psi)
        W = pauli_stack(self._n)[k - 1]
        expval = np.einsum("kij,ji->k", W, rho).real
        p_plus = np.clip((1 + expval) / 2, 0.0, 1.0)
        plus = self._rng.binomial(t, p_plus)
        self._uses += int(t.sum())
        sums = 2 * plus - t
        return int(sums[0]) if scalar else sums

    def _tetra_probs(self):
        if self._tetra_out is None:
            states = tetrahedron_states(self._n)
            # p[kappa, l] = tr(Pi_l E(rho_kappa)),  Pi_l = |t_l><t_l| / d
            probs = np.empty((states.shape[0], states.shape[0]))
            for kappa, psi in enumerate(states):
                out = apply_pure(self._channel, psi)
                probs[kappa] = np.einsum("li,ij,lj->l", states.conj(), out, states).real / self.dim
            probs = np.clip(probs, 0.0, None)
            self._tetra_out = probs / probs.sum(axis=1, keepdims=True)
        return self._tetra_out

    def measure_tetrahedron(self, kappa: int, t: int) -> np.ndarray:
        """Prepare tetrahedron state ``kappa`` (1-based) ``t`` times; return POVM counts."""
        if not 1 <= kappa <= 4**self._n:
            raise ValueError("setting index out of range")
        if t < 1:
            raise ValueError("shot count must be positive")
        counts = self._rng.multinomial(int(t), self._tetra_probs()[kappa - 1])
        self._uses += int(t)
        return counts

    def view(self) -> "BlackBoxView":
        return BlackBoxView(self)


class BlackBoxView:
    """The only handle estimators get on a black box."""

    __slots__ = ("measure_pauli", "measure_tetrahedron", "uses", "n_qubits", "dim")

    def __init__(self, box: NoisyGateBlackBox):
        # plain closures rather than bound methods, so no __self__ leads back to the box
        def measure_pauli(psi, k, t):
            return box.measure_pauli(psi, k, t)

        def measure_tetrahedron(kappa, t):
            return box.measure_tetrahedron(kappa, t)

        def uses():
            return box.uses()

        measure_pauli.__doc__ = NoisyGateBlackBox.measure_pauli.__doc__
        measure_tetrahedron.__doc__ = NoisyGateBlackBox.measure_tetrahedron.__doc__
        object.__setattr__(self, "measure_pauli", measure_pauli)
        object.__setattr__(self, "measure_tetrahedron", measure_tetrahedron)
        object.__setattr__(self, "uses", uses)
        object.__setattr__(self, "n_qubits", box.n_qubits)
        object.__setattr__(self, "dim", box.dim)

    def __setattr__(self, name, value):
        raise AttributeError("BlackBoxView is read-only")

    def __repr__(self):
        return f"BlackBoxView(n_qubits={self.n_qubits}, uses={self.uses()})"


def as_view(box) -> BlackBoxView:
    if isinstance(box, BlackBoxView):
        return box
    if isinstance(box, NoisyGateBlackBox):
        return box.view()
    raise TypeError("expected a NoisyGateBlackBox or BlackBoxView")
