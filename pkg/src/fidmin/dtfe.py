"""Direct target fidelity estimation by importance-sampled Pauli measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._utils import COEF_CUTOFF, check_random_state, num_qubits
from .blackbox import as_view
from .quantum import pauli_coefficients_pure, pauli_stack


@dataclass(frozen=True)
class DtfeParams:
    """Accuracy knob ``eta`` and failure knob ``delta``.

    With these settings ``P(|Y - F| >= 2 eta) <= 2 delta``.
    """

    eta: float
    delta: float = 0.05

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 < self.delta <= 0.5:
            raise ValueError(f"delta must lie in (0, 0.5], got {self.delta}")

    @property
    def n_draws(self) -> int:
        return math.ceil(1.0 / (self.eta * self.delta**2) - 1e-9)


@dataclass(frozen=True)
class DtfeResult:
    estimate: float
    uses: int
    draws: int


def importance_distribution(psi):
    """Pauli indices with nonzero weight ``p_k = x_k(psi)^2``.

    Returns
    -------
    ks : int array (1-based Pauli indices)
    probs : float array, sums to one
    coefs : float array, the coefficients ``x_k(psi)``
    """
    x = pauli_coefficients_pure(psi)
    keep = np.abs(x) > COEF_CUTOFF
    ks = np.flatnonzero(keep) + 1
    probs = x[keep] ** 2
    return ks, probs / probs.sum(), x[keep]


def _pauli_expectations(psi, ks):
    # <psi|W_k|psi> without the 1/sqrt(d) factor, so exact +-1 values stay exact
    W = pauli_stack(num_qubits(psi.shape[0]))[ks - 1]
    return np.einsum("i,kij,j->k", psi.conj(), W, psi).real


def shots_per_draw(probs, d: int, params: DtfeParams) -> np.ndarray:
    """Integer shot count ``ceil(2 ln(2/delta) / (d p_k h eta^2))`` for each index."""
    h = params.n_draws
    t = 2 * math.log(2 / params.delta) / (d * probs * h * params.eta**2)
    # guard against ceil(1.0000000000000002) style round-up on exact integers
    return np.maximum(np.ceil(t - 1e-9), 1).astype(np.int64)


def estimate_fidelity(box, psi, params: DtfeParams, rng=None) -> DtfeResult:
    """Estimate ``<psi|E(psi)|psi>`` through the black box.

    ``h = ceil(1/(eta delta^2))`` Pauli indices are drawn from ``p_k``; each
    non-identity draw costs ``t_k`` shots. Draws of the same index share
    ``t_k`` and ``x_k``, so their contributions to ``Y`` are pooled into one
    batched measurement per distinct index, which has the same distribution
    as measuring each draw separately.
    """
    box = as_view(box)
    rng = check_random_state(rng)
    psi = np.asarray(psi, dtype=complex)
    d = box.dim
    if psi.shape != (d,):
        raise ValueError(f"state dimension {psi.shape[0]} does not match box dimension {d}")
    ks, probs, _ = importance_distribution(psi)
    h = params.n_draws
    draws = rng.multinomial(h, probs)
    t = shots_per_draw(probs, d, params)

    total = 0.0
    is_id = ks == 1
    total += draws[is_id].sum()  # X = 1 exactly for the identity
    sel = (~is_id) & (draws > 0)
    uses_before = box.uses()
    if sel.any():
        sums = box.measure_pauli(psi, ks[sel], draws[sel] * t[sel])
        w = _pauli_expectations(psi, ks[sel])
        total += float(np.sum(sums / (t[sel] * w)))
    return DtfeResult(estimate=total / h, uses=box.uses() - uses_before, draws=h)


def expected_cost(eta: float, delta: float, d: int) -> float:
    """Upper bound ``2 ln(2/delta) d / eta^2`` on the expected number of copies."""
    return 2 * math.log(2 / delta) * d / eta**2
