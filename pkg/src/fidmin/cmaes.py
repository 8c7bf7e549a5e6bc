"""CMA-ES building blocks for the noisy fidelity descent.

Strategy constants follow the defaults of Hansen's CMA-ES tutorial
(arXiv:1604.00772). Only positive recombination weights are used.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._utils import check_random_state
from .quantum import haar_random_state, state_to_param


class DegenerateSampleError(ValueError):
    """All sample points coincide with their centroid."""


@dataclass(frozen=True)
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    lam: int
    mu: int
    weights: np.ndarray
    generation: int = 0
    # derived strategy constants
    mueff: float = field(init=False)
    c_sigma: float = field(init=False)
    d_sigma: float = field(init=False)
    c_c: float = field(init=False)
    c_1: float = field(init=False)
    c_mu: float = field(init=False)
    chi_n: float = field(init=False)

    def __post_init__(self):
        N = self.dim
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.mu,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be mu positive numbers summing to one")
        if not 1 <= self.mu <= self.lam:
            raise ValueError("need 1 <= mu <= lambda")
        mueff = 1.0 / np.sum(w**2)
        c_sigma = (mueff + 2) / (N + mueff + 5)
        set_ = object.__setattr__
        set_(self, "mueff", mueff)
        set_(self, "c_sigma", c_sigma)
        set_(self, "d_sigma", 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (N + 1)) - 1) + c_sigma)
        set_(self, "c_c", (4 + mueff / N) / (N + 4 + 2 * mueff / N))
        c_1 = 2 / ((N + 1.3) ** 2 + mueff)
        set_(self, "c_1", c_1)
        set_(self, "c_mu", min(1 - c_1, 2 * (mueff - 2 + 1 / mueff) / ((N + 2) ** 2 + mueff)))
        set_(self, "chi_n", math.sqrt(N) * (1 - 1 / (4 * N) + 1 / (21 * N**2)))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def default_popsize(N: int) -> int:
    return 4 + int(math.floor(3 * math.log(N)))


def default_weights(lam: int, mu=None) -> np.ndarray:
    mu = lam // 2 if mu is None else mu
    w = math.log((lam + 1) / 2) - np.log(np.arange(1, mu + 1))
    return w / w.sum()


def cma_init(d: int, rng=None, sigma0: float = 0.3, lam=None, mu=None, mean=None) -> CmaState:
    """Initial state on the ``2d`` real parameters of a ``d``-dimensional pure state.

    The mean is the parameter vector of a Haar-random state unless ``mean``
    is given; the covariance is the identity.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = check_random_state(rng)
    N = 2 * d
    lam = default_popsize(N) if lam is None else int(lam)
    if mean is None:
        mean = state_to_param(haar_random_state(d, rng))
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (N,):
        raise ValueError(f"mean must have length {N}")
    weights = default_weights(lam, mu)
    return CmaState(
        mean=mean,
        sigma=float(sigma0),
        C=np.eye(N),
        p_sigma=np.zeros(N),
        p_c=np.zeros(N),
        lam=lam,
        mu=weights.shape[0],
        weights=weights,
    )


def _sqrt_factors(C):
    w, B = np.linalg.eigh(C)
    if not np.all(np.isfinite(w)) or w.min() <= 0:
        raise np.linalg.LinAlgError("covariance matrix is not positive definite")
    return B, np.sqrt(w)


def cma_sample(state: CmaState, rng=None) -> np.ndarray:
    """Draw ``lam`` points ``m + sigma C^{1/2} z``; shape ``(lam, N)``."""
    rng = check_random_state(rng)
    B, D = _sqrt_factors(state.C)
    z = rng.standard_normal((state.lam, state.dim))
    return state.mean + state.sigma * (z * D) @ B.T


def cma_update(state: CmaState, points, fvals) -> CmaState:
    """One CMA-ES generation update from evaluated points (any order).

    Only the ranking of ``fvals`` enters: ties keep input order.
    """
    points = np.asarray(points, dtype=float)
    fvals = np.asarray(fvals, dtype=float)
    if points.shape != (state.lam, state.dim) or fvals.shape != (state.lam,):
        raise ValueError("need exactly lambda points with one f value each")
    if not np.all(np.isfinite(fvals)):
        raise ValueError("f values must be finite")
    N = state.dim
    order = np.argsort(fvals, kind="stable")
    sel = points[order[: state.mu]]
    w = state.weights
    m_old = state.mean
    m_new = w @ sel
    y = (sel - m_old) / state.sigma
    y_w = w @ y

    B, D = _sqrt_factors(state.C)
    C_inv_sqrt_yw = B @ ((B.T @ y_w) / D)
    cs, cc = state.c_sigma, state.c_c
    p_sigma = (1 - cs) * state.p_sigma + math.sqrt(cs * (2 - cs) * state.mueff) * C_inv_sqrt_yw
    g = state.generation + 1
    ps_norm = np.linalg.norm(p_sigma)
    h_sigma = float(ps_norm / math.sqrt(1 - (1 - cs) ** (2 * g)) < (1.4 + 2 / (N + 1)) * state.chi_n)
    p_c = (1 - cc) * state.p_c + h_sigma * math.sqrt(cc * (2 - cc) * state.mueff) * y_w

    c1, cmu = state.c_1, state.c_mu
    delta_h = (1 - h_sigma) * cc * (2 - cc)
    C = (
        (1 + c1 * delta_h - c1 - cmu * w.sum()) * state.C
        + c1 * np.outer(p_c, p_c)
        + cmu * (y.T * w) @ y
    )
    C = (C + C.T) / 2
    sigma = state.sigma * math.exp((cs / state.d_sigma) * (ps_norm / state.chi_n - 1))
    return replace(state, mean=m_new, sigma=sigma, C=C, p_sigma=p_sigma, p_c=p_c, generation=g)


def range_and_gradient(points, fvals, centroid, f_centroid):
    """Range ``max f - min f`` and the mean secant slope from the centroid.

    Pairs closer than 1e-14 to the centroid are skipped; the sum is still
    divided by the population size.
    """
    points = np.asarray(points, dtype=float)
    fvals = np.asarray(fvals, dtype=float)
    lam = fvals.shape[0]
    delta_f = float(fvals.max() - fvals.min())
    dist = np.linalg.norm(points - np.asarray(centroid, dtype=float), axis=1)
    ok = dist >= 1e-14
    if not ok.any():
        raise DegenerateSampleError("all sample points coincide with the centroid")
    grad = float(np.sum(np.abs(f_centroid - fvals[ok]) / dist[ok]) / lam)
    return delta_f, grad


class Decision(enum.Enum):
    CONTINUE = "continue"
    HALVE = "halve"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class StoppingState:
    g: float
    epsilon: float

    def __post_init__(self):
        if self.g <= 0 or self.epsilon <= 0:
            raise ValueError("threshold and accuracy must be positive")


def stopping_step(stop: StoppingState, delta_f: float, grad_f: float):
    """Adaptive gradient/range stopping rule.

    Returns ``(decision, new_stopping_state)``. The threshold is halved when
    the gradient is below it while the range still exceeds ``epsilon``.
    """
    if grad_f >= stop.g:
        return Decision.CONTINUE, stop
    if delta_f >= stop.epsilon:
        return Decision.HALVE, replace(stop, g=stop.g / 2)
    return Decision.TERMINATE, stop


@dataclass(frozen=True)
class UncertaintyState:
    eta: float
    delta: float = 0.05
    theta: float = 0.7
    alpha: float = 1 / math.sqrt(2)
    eta_max: float = 1.0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def ranks(values) -> np.ndarray:
    """1-based ranks with ties broken by position."""
    values = np.asarray(values, dtype=float)
    r = np.empty(values.shape[0], dtype=np.int64)
    r[np.argsort(values, kind="stable")] = np.arange(1, values.shape[0] + 1)
    return r


def rank_change_percentile(R, lam: int, theta: float) -> float:
    """Nearest-rank ``50 theta``-th percentile of ``{|1-R|, ..., |2 lam - 1 - R|}``."""
    vals = np.sort(np.abs(np.arange(1, 2 * lam) - R))
    idx = max(1, math.ceil(0.5 * theta * vals.shape[0] - 1e-12))
    return float(vals[idx - 1])


def uncertainty_handle(f, f_tilde, unc: UncertaintyState):
    """Rank-change test on two evaluations per point.

    Returns
    -------
    s : float
        Uncertainty level; positive means the ranking is noise dominated.
    unc : UncertaintyState
        With ``eta`` multiplied by ``alpha`` (s > 0) or divided by it (s < 0).
        The increase is skipped if it would exceed ``eta_max``.
    f_avg : ndarray
        Mean of the two evaluations.
    """
    f = np.asarray(f, dtype=float)
    f_tilde = np.asarray(f_tilde, dtype=float)
    lam = f.shape[0]
    if f_tilde.shape != (lam,):
        raise ValueError("need one re-evaluation per point")
    R = ranks(np.concatenate([f, f_tilde]))
    R_f, R_ft = R[:lam], R[lam:]
    delta_R = np.abs(R_f - R_ft) - 1
    step_ft = (f_tilde - f > 0).astype(int)
    step_f = (f - f_tilde > 0).astype(int)
    terms = [
        2 * delta_R[a]
        - rank_change_percentile(R_ft[a] - step_ft[a], lam, unc.theta)
        - rank_change_percentile(R_f[a] - step_f[a], lam, unc.theta)
        for a in range(lam)
    ]
    s = float(np.mean(terms))
    eta = unc.eta
    if s > 0:
        eta = eta * unc.alpha
    elif s < 0 and eta / unc.alpha <= unc.eta_max:
        eta = eta / unc.alpha
    return s, replace(unc, eta=eta), (f + f_tilde) / 2
