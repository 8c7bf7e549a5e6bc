"""Direct ``F_min`` estimation: CMA-ES descent on DTFE fidelity estimates.

Each iteration evaluates every sample point twice and the centroid once.
The pair of evaluations drives the rank-change test that tunes the DTFE
accuracy; the averaged values feed the CMA-ES update and the range and
gradient stopping rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._utils import check_random_state
from .blackbox import as_view
from .cmaes import (
    Decision,
    DegenerateSampleError,
    StoppingState,
    UncertaintyState,
    cma_init,
    cma_sample,
    cma_update,
    range_and_gradient,
    stopping_step,
    uncertainty_handle,
)
from .dtfe import DtfeParams, estimate_fidelity
from .quantum import canonical_phase, param_to_state


@dataclass(frozen=True)
class GfmConfig:
    g_init: float = 0.1
    delta: float = 0.05
    eta_init: float = 0.1
    sigma_init: float = 0.3
    lam: int | None = None
    restarts: int = 3
    theta: float = 0.7
    alpha: float = 1 / math.sqrt(2)
    max_iterations: int = 2000

    def __post_init__(self):
        if self.g_init <= 0 or self.sigma_init <= 0:
            raise ValueError("g_init and sigma_init must be positive")
        if not 0 < self.eta_init <= 1:
            raise ValueError("eta_init must lie in (0, 1]")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be at least 1")
        if self.lam is not None and self.lam < 2:
            raise ValueError("population size must be at least 2")


@dataclass(frozen=True)
class Descent:
    f_min_estimate: float
    argmin: np.ndarray
    iterations: int
    converged: bool
    final_eta: float
    final_g: float


@dataclass(frozen=True)
class GfmResult:
    f_min_estimate: float
    argmin: np.ndarray
    uses: int
    iterations: int
    restarts_used: int
    converged: bool
    descents: tuple = field(default=(), repr=False)


def dtfe_evaluator(box, delta: float, rng):
    """``psi, eta -> (Y, uses)`` backed by DTFE on the black box."""
    box = as_view(box)

    def evaluate(psi, eta):
        res = estimate_fidelity(box, psi, DtfeParams(eta, delta), rng)
        return res.estimate, res.uses

    return evaluate


def _descent(evaluate, d, epsilon, config: GfmConfig, rng, trace=None) -> Descent:
    state = cma_init(d, rng, sigma0=config.sigma_init, lam=config.lam)
    stop = StoppingState(config.g_init, epsilon)
    unc = UncertaintyState(config.eta_init, config.delta, config.theta, config.alpha)
    best_f, best_psi = math.inf, canonical_phase(param_to_state(state.mean))
    converged = False
    it = 0
    uses = 0
    while it < config.max_iterations:
        try:
            points = cma_sample(state, rng)
        except np.linalg.LinAlgError:
            # covariance collapsed; the current best stands
            break
        it += 1
        eta = unc.eta
        psis = [param_to_state(p) for p in points]
        f1 = np.empty(state.lam)
        f2 = np.empty(state.lam)
        for a, psi in enumerate(psis):
            f1[a], u1 = evaluate(psi, eta)
            f2[a], u2 = evaluate(psi, eta)
            uses += u1 + u2
        centroid = points.mean(axis=0)
        f_c, u_c = evaluate(param_to_state(centroid), eta)
        uses += u_c

        _, unc, f_avg = uncertainty_handle(f1, f2, unc)
        a_best = int(np.argmin(f_avg))
        best_f, best_psi = float(f_avg[a_best]), psis[a_best]
        try:
            delta_f, grad_f = range_and_gradient(points, f_avg, centroid, f_c)
        except DegenerateSampleError:
            converged = True
            break
        decision, stop = stopping_step(stop, delta_f, grad_f)
        if trace is not None:
            trace({
                "iteration": it, "delta_f": delta_f, "grad_f": grad_f, "g": stop.g,
                "eta": eta, "best_f": best_f, "uses": uses, "decision": decision.value,
            })
        if decision is Decision.TERMINATE:
            converged = True
            break
        state = cma_update(state, points, f_avg)
    return Descent(
        f_min_estimate=min(max(best_f, 0.0), 1.0),
        argmin=canonical_phase(best_psi),
        iterations=it,
        converged=converged,
        final_eta=unc.eta,
        final_g=stop.g,
    )


def run_gfm(box, epsilon: float, config: GfmConfig = GfmConfig(), rng=None, evaluator=None, trace=None) -> GfmResult:
    """Estimate ``F_min`` of the channel inside ``box`` to accuracy ``epsilon``.

    Runs ``config.restarts`` independent descents from Haar-random means and
    reports the smallest descent estimate. ``evaluator(psi, eta) -> (f, uses)``
    replaces DTFE (for instance with exact fidelities); ``box`` may then be
    ``None`` provided ``evaluator`` has a ``dim`` attribute. ``trace`` is called
    with one dict per iteration.
    """
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    rng = check_random_state(rng)
    view = as_view(box) if box is not None else None
    if view is None and evaluator is None:
        raise ValueError("need a black box or an evaluator")
    d = view.dim if view is not None else evaluator.dim
    uses0 = view.uses() if view is not None else 0

    descents = []
    for k, child in enumerate(rng.spawn(config.restarts)):
        evaluate = evaluator if evaluator is not None else dtfe_evaluator(view, config.delta, child)
        tr = None if trace is None else (lambda rec, k=k: trace({"descent": k, **rec}))
        descents.append(_descent(evaluate, d, epsilon, config, child, tr))

    best = min(descents, key=lambda r: r.f_min_estimate)
    return GfmResult(
        f_min_estimate=best.f_min_estimate,
        argmin=best.argmin,
        uses=(view.uses() - uses0) if view is not None else 0,
        iterations=sum(r.iterations for r in descents),
        restarts_used=len(descents),
        converged=all(r.converged for r in descents),
        descents=tuple(descents),
    )
