"""Process tomography with the product tetrahedron design and ``F_min`` as the
stopping criterion.

The Born-rule design matrix factorizes over the ``2n`` qubit slots
(``n`` input, ``n`` output), so inversion is applied slot by slot and the
full ``16^n x 16^n`` matrix is never built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._utils import check_random_state
from .blackbox import as_view
from .channels import partial_trace_output
from .landscape import FidelityLandscape, multistart_cg
from .quantum import SINGLE_QUBIT_PAULIS, TETRAHEDRON_VECTORS


# --------------------------------------------------------------------------
# design

def design_factors(n: int):
    """Single-qubit design blocks, ``n`` input blocks followed by ``n`` output blocks.

    With Choi coordinates ``J = sum_alpha x_alpha sigma_alpha`` (unnormalized
    Pauli strings over the ``2n`` slots), the Born probabilities are
    ``p = (A_in^{(x)n} (x) A_out^{(x)n}) x`` where
    ``A_in[k] = 2 (1, a_x, -a_y, a_z)`` comes from ``d tr(sigma psi_k^T)`` and
    ``A_out[l] = (1, a_x, a_y, a_z) / 2`` from ``tr(sigma psi_l / 2)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    a = TETRAHEDRON_VECTORS
    ones = np.ones((4, 1))
    A_in = 2 * np.hstack([ones, a * np.array([1, -1, 1])])
    A_out = 0.5 * np.hstack([ones, a])
    return [A_in] * n + [A_out] * n


def apply_factors(blocks, vec) -> np.ndarray:
    """``(B_1 (x) ... (x) B_m) vec`` without forming the Kronecker product."""
    m = len(blocks)
    T = np.asarray(vec).reshape((4,) * m)
    for s, B in enumerate(blocks):
        T = np.moveaxis(np.tensordot(B, T, axes=([1], [s])), 0, s)
    return T.reshape(-1)


def dense_design(n: int) -> np.ndarray:
    out = np.ones((1, 1))
    for B in design_factors(n):
        out = np.kron(out, B)
    return out


def pauli_coords_to_choi(x, n_slots: int) -> np.ndarray:
    """``sum_alpha x_alpha sigma_alpha`` over ``n_slots`` qubits."""
    T = np.asarray(x, dtype=complex).reshape((4,) * n_slots)
    for _ in range(n_slots):
        T = np.tensordot(T, SINGLE_QUBIT_PAULIS, axes=([0], [0]))
    # axes now (r1, c1, r2, c2, ...)
    perm = list(range(0, 2 * n_slots, 2)) + list(range(1, 2 * n_slots, 2))
    D = 2**n_slots
    return T.transpose(perm).reshape(D, D)


def choi_to_pauli_coords(J) -> np.ndarray:
    """Inverse of :func:`pauli_coords_to_choi`: ``x_alpha = tr(sigma_alpha J) / D``."""
    J = np.asarray(J, dtype=complex)
    D = J.shape[0]
    m = int(round(math.log2(D)))
    T = J.reshape((2,) * (2 * m))  # (r1..rm, c1..cm)
    perm = [v for s in range(m) for v in (s, m + s)]
    T = T.transpose(perm)  # (r1, c1, r2, c2, ...)
    for _ in range(m):
        # contract sigma[alpha, c, r] with the leading (r, c) pair
        T = np.tensordot(T, SINGLE_QUBIT_PAULIS, axes=([0, 1], [2, 1]))
    return T.reshape(-1).real / D


def born_probabilities(J) -> np.ndarray:
    """Exact tetrahedron outcome probabilities ``p[kappa, l]`` for Choi state ``J``."""
    D = J.shape[0]
    n = int(round(math.log2(D))) // 2
    p = apply_factors(design_factors(n), choi_to_pauli_coords(J))
    return p.reshape(4**n, 4**n)


# --------------------------------------------------------------------------
# data

@dataclass
class CountsTable:
    """Click counts ``counts[kappa, l]`` with ``shots_per_setting`` clicks per input state."""

    n_qubits: int
    shots_per_setting: int
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        m = 4**self.n_qubits
        if self.counts.shape != (m, m):
            raise ValueError(f"counts must have shape ({m}, {m})")
        if self.counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        if np.any(self.counts.sum(axis=1) != self.shots_per_setting):
            raise ValueError("every row must sum to shots_per_setting")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots_per_setting

    def merge(self, other: "CountsTable") -> "CountsTable":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot merge tables of different size")
        return CountsTable(self.n_qubits, self.shots_per_setting + other.shots_per_setting,
                           self.counts + other.counts)


def simulate_counts(box, shots_per_setting: int) -> CountsTable:
    """Send every tetrahedron input ``shots_per_setting`` times through the box."""
    box = as_view(box)
    if shots_per_setting < 1:
        raise ValueError("shots_per_setting must be positive")
    n = box.n_qubits
    rows = [box.measure_tetrahedron(kappa, shots_per_setting) for kappa in range(1, 4**n + 1)]
    return CountsTable(n, shots_per_setting, np.array(rows))


def linear_inversion(counts) -> np.ndarray:
    """Choi candidate solving the Born equations for the observed frequencies.

    Accepts a :class:`CountsTable` or a ``(4^n, 4^n)`` probability array.
    The result is Hermitian with unit trace but need not be CP or TP.
    """
    freqs = counts.frequencies() if isinstance(counts, CountsTable) else np.asarray(counts, dtype=float)
    m = freqs.shape[0]
    n = int(round(math.log(m, 4)))
    blocks = design_factors(n)
    inverses = []
    for B in blocks:
        if np.linalg.cond(B) > 1e8:
            raise np.linalg.LinAlgError("singular design block")
        inverses.append(np.linalg.inv(B))
    x = apply_factors(inverses, freqs.reshape(-1))
    J = pauli_coords_to_choi(x, 2 * n)
    return (J + J.conj().T) / 2


# --------------------------------------------------------------------------
# projection

def project_cp(J) -> np.ndarray:
    w, V = np.linalg.eigh((J + J.conj().T) / 2)
    return (V * np.clip(w, 0, None)) @ V.conj().T


def project_tp(J) -> np.ndarray:
    d = int(round(math.sqrt(J.shape[0])))
    return J - np.kron(partial_trace_output(J) - np.eye(d) / d, np.eye(d) / d)


class ProjectionResult(NamedTuple):
    choi: np.ndarray
    iterations: int
    converged: bool


def project_cptp(J, tol: float = 1e-8, max_iter: int = 10_000, dykstra: bool = True, callback=None) -> ProjectionResult:
    """Nearest CPTP Choi state (Frobenius norm) by alternating projections.

    With ``dykstra=True`` both projections carry Dykstra correction terms,
    so the limit is the nearest point of the intersection rather than just
    some feasible point. The returned iterate is the TP projection; the loop
    runs until successive iterates move less than ``tol`` and the minimum
    eigenvalue is above ``-tol``. ``callback(iteration, J)`` sees each iterate.
    """
    J = np.asarray(J, dtype=complex)
    x = (J + J.conj().T) / 2
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for it in range(1, max_iter + 1):
        y = project_cp(x + p)
        if dykstra:
            p = x + p - y
        x_new = project_tp(y + q)
        if dykstra:
            q = y + q - x_new
        x_new = (x_new + x_new.conj().T) / 2
        if callback is not None:
            callback(it, x_new)
        change = np.linalg.norm(x_new - x)
        x = x_new
        if change < tol and np.linalg.eigvalsh(x).min() >= -tol:
            return ProjectionResult(x, it, True)
    return ProjectionResult(x, max_iter, False)


# --------------------------------------------------------------------------
# estimation

def minimize_fidelity_cg(channel_estimate, restarts: int = 10, tol: float = 1e-8, rng=None, starts=()):
    """Minimum fidelity of an estimated channel: ``(f_min, argmin_state)``."""
    best = multistart_cg(FidelityLandscape(channel_estimate), restarts=restarts, tol=tol,
                         rng=rng, starts=starts)[0]
    return min(max(best.f, 0.0), 1.0), best.psi


def estimate_from_counts(counts: CountsTable, restarts: int = 10, rng=None, starts=(), tol: float = 1e-8):
    """Inversion, projection and minimization; returns ``(f_min, argmin, choi)``."""
    J = project_cptp(linear_inversion(counts)).choi
    f, psi = minimize_fidelity_cg(J, restarts=restarts, tol=tol, rng=rng, starts=starts)
    return f, psi, J


def bootstrap_replicas(counts: CountsTable, B: int = 50, rng=None, restarts: int = 2, starts=()) -> np.ndarray:
    """``F_min`` of ``B`` parametric bootstrap replicas.

    Each setting's counts are redrawn from a multinomial with the observed
    frequencies; each replica goes through the full estimation pipeline.
    CG in the replicas starts from ``starts`` plus ``restarts`` random states.
    """
    if B < 2:
        raise ValueError("need at least two bootstrap replicas")
    rng = check_random_state(rng)
    freqs = counts.frequencies()
    out = np.empty(B)
    for b in range(B):
        rows = np.array([rng.multinomial(counts.shots_per_setting, f) for f in freqs])
        rep = CountsTable(counts.n_qubits, counts.shots_per_setting, rows)
        out[b] = estimate_from_counts(rep, restarts=restarts, rng=rng, starts=starts)[0]
    return out


def bootstrap_sigma(counts: CountsTable, B: int = 50, rng=None, restarts: int = 2, starts=()) -> float:
    """Sample standard deviation of the bootstrap replicas' ``F_min``."""
    return float(np.std(bootstrap_replicas(counts, B, rng, restarts, starts), ddof=1))


@dataclass(frozen=True)
class QptConfig:
    base_shots: int = 32
    g_thres: float | None = None  # None: use epsilon
    bootstrap_B: int = 50
    cg_restarts: int = 10
    bootstrap_cg_restarts: int = 2
    max_rounds: int = 18

    def __post_init__(self):
        if self.base_shots < 1 or self.bootstrap_B < 2 or self.cg_restarts < 0 or self.max_rounds < 2:
            raise ValueError("invalid QPT configuration")


@dataclass(frozen=True)
class QptRound:
    round: int
    uses: int
    f_min: float
    sigma: float | None


@dataclass(frozen=True)
class QptResult:
    f_min_estimate: float
    sigma_hat: float
    uses: int
    rounds: int
    converged: bool
    history: tuple = field(default=(), repr=False)


def qpt_rounds(box, epsilon: float, config: QptConfig, rng, need_sigma):
    """Run doubling rounds, yielding a :class:`QptRound` after each.

    ``need_sigma(k, f_k, f_prev)`` decides whether the bootstrap is run in
    round ``k``. Per-round seeds are drawn unconditionally, so the data and
    the bootstrap of any round do not depend on that decision.
    """
    view = as_view(box)
    rng = check_random_state(rng)
    uses0 = view.uses()
    counts = None
    f_prev, psi_prev = None, None
    for k in range(1, config.max_rounds + 1):
        shots = config.base_shots if k == 1 else counts.shots_per_setting
        new = simulate_counts(view, shots)
        counts = new if counts is None else counts.merge(new)
        cg_seed, boot_seed = rng.integers(0, 2**63, size=2)
        starts = () if psi_prev is None else (psi_prev,)
        f_k, psi_k, _ = estimate_from_counts(counts, restarts=config.cg_restarts,
                                             rng=np.random.default_rng(cg_seed), starts=starts)
        sigma = None
        if need_sigma(k, f_k, f_prev):
            sigma = bootstrap_sigma(counts, config.bootstrap_B, np.random.default_rng(boot_seed),
                                    restarts=config.bootstrap_cg_restarts, starts=(psi_k,))
        yield QptRound(k, view.uses() - uses0, f_k, sigma)
        f_prev, psi_prev = f_k, psi_k


def run_qpt_estimation(box, epsilon: float, config: QptConfig = QptConfig(), rng=None) -> QptResult:
    """Doubling-schedule QPT until the bootstrap error bar is below ``2 epsilon``
    and ``F_min`` moved less than ``g_thres`` since the previous round."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    g_thres = epsilon if config.g_thres is None else config.g_thres

    def need_sigma(k, f_k, f_prev):
        return k >= 2 and abs(f_k - f_prev) < g_thres

    history = []
    for r in qpt_rounds(box, epsilon, config, rng, need_sigma):
        history.append(r)
        if r.sigma is not None and r.sigma < 2 * epsilon:
            return QptResult(r.f_min, r.sigma, r.uses, r.round, True, tuple(history))
    last = history[-1]
    sigma = last.sigma if last.sigma is not None else math.nan
    return QptResult(last.f_min, sigma, last.uses, last.round, False, tuple(history))


def qpt_trajectory(box, epsilon: float, config: QptConfig, rng, g_candidates):
    """Rounds needed to decide the stopping rule for every threshold in ``g_candidates``.

    Replaying :func:`stop_round` on the result reproduces exactly what
    :func:`run_qpt_estimation` would return for each candidate.
    """
    g_max = max(g_candidates)
    pending = set(g_candidates)
    history = []

    def need_sigma(k, f_k, f_prev):
        return k >= 2 and abs(f_k - f_prev) < g_max

    for r in qpt_rounds(box, epsilon, config, rng, need_sigma):
        history.append(r)
        if r.sigma is not None and r.sigma < 2 * epsilon:
            delta = abs(r.f_min - history[-2].f_min)
            pending = {g for g in pending if not delta < g}
            if not pending:
                break
    return history


def stop_round(history, epsilon: float, g_thres: float) -> QptRound:
    """First round in ``history`` satisfying both stopping criteria (else the last)."""
    for prev, r in zip(history, history[1:]):
        if abs(r.f_min - prev.f_min) < g_thres and r.sigma is not None and r.sigma < 2 * epsilon:
            return r
    return history[-1]
