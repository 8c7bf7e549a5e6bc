"""White-box ground truth for scoring estimators: exact fidelities and ``F_min``.

Nothing here is reachable from the estimators; tests and the experiment
driver call it with direct channel access.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._utils import check_random_state, check_state_vector
from .channels import QuantumChannel, apply_pure, channel_from_any
from .landscape import FidelityLandscape, _as_choi, bloch_grid_minimum, multistart_cg
from .quantum import bloch_to_state, canonical_phase, trace_norm

UNCERTAIN_GAP = 1e-4
AGREE_TOL = 1e-6


@dataclass(frozen=True)
class OracleResult:
    f_min: float
    argmin: np.ndarray
    starts_used: int
    converged_starts: int
    uncertain: bool = False


def exact_fidelity(channel, psi) -> float:
    """``<psi|E(psi)|psi>`` from the Kraus operators."""
    channel = channel_from_any(channel)
    psi = check_state_vector(psi, dim=channel.dim)
    return float(np.real(psi.conj() @ apply_pure(channel, psi) @ psi))


def fidelity_via_choi(choi, psi) -> float:
    """``d <conj(psi) psi| J |conj(psi) psi>`` for Choi state ``J``."""
    J = _as_choi(choi)
    d = int(round(np.sqrt(J.shape[0])))
    psi = check_state_vector(psi, dim=d)
    v = np.kron(psi.conj(), psi)
    return float(d * np.real(v.conj() @ J @ v))


def exact_fmin(channel, restarts: int = 20, tol: float = 1e-8, rng=0, grid_points: int = 1_000_000) -> OracleResult:
    """Global minimum of ``f`` by multistart CG.

    For a qubit the CG result is cross-checked against a Bloch-sphere grid
    of ``grid_points`` points, refined locally. For larger registers the
    result is marked ``uncertain`` when only one start reached the best
    value while another start converged to a distinct minimum more than
    1e-4 above it.
    """
    rng = check_random_state(rng)
    J = _as_choi(channel)
    landscape = FidelityLandscape(J)
    extra = []
    if landscape.dim == 2 and grid_points:
        _, r = bloch_grid_minimum(J, grid_points)
        extra.append(bloch_to_state(r))
    minima = multistart_cg(landscape, restarts=restarts, tol=tol, rng=rng, starts=extra)
    best = minima[0]
    converged = [m for m in minima if m.converged]
    uncertain = False
    if landscape.dim > 2:
        agree = sum(1 for m in converged if m.f - best.f <= AGREE_TOL)
        worse = any(m.f - best.f > UNCERTAIN_GAP for m in converged)
        uncertain = agree < 2 and worse
    return OracleResult(
        f_min=min(max(best.f, 0.0), 1.0),
        argmin=canonical_phase(best.psi),
        starts_used=len(minima),
        converged_starts=len(converged),
        uncertain=uncertain,
    )


def fmin_bound_check(channel_a, channel_b, restarts: int = 20, rng=0):
    """Both sides of ``|F'_min - F_min| <= 2 d ||J' - J||_tr``.

    Returns ``(lhs, rhs)``.
    """
    Ja, Jb = _as_choi(channel_a), _as_choi(channel_b)
    if Ja.shape != Jb.shape:
        raise ValueError("channels act on different dimensions")
    d = int(round(np.sqrt(Ja.shape[0])))
    fa = exact_fmin(Ja, restarts=restarts, rng=rng).f_min
    fb = exact_fmin(Jb, restarts=restarts, rng=rng).f_min
    return abs(fb - fa), 2 * d * trace_norm(Jb - Ja)


def exact_evaluator(channel: QuantumChannel):
    """Noise-free stand-in for DTFE: ``psi, eta -> (f(psi), 0 uses)``."""
    landscape = FidelityLandscape(channel)

    def evaluate(psi, eta):
        return landscape.fidelity(psi), 0

    evaluate.dim = landscape.dim
    return evaluate
