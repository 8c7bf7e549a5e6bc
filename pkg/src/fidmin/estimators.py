"""Estimator objects with the scikit-learn parameter API.

``fit`` takes a black box instead of a data matrix: the data are collected
by the estimator itself. Fitted attributes end in an underscore.
"""
from __future__ import annotations

import math

from sklearn.base import BaseEstimator

from ._utils import check_random_state
from .gfm import GfmConfig, run_gfm
from .qpt import QptConfig, run_qpt_estimation


class GfmEstimator(BaseEstimator):
    """CMA-ES descent on DTFE estimates.

    Attributes after ``fit``: ``f_min_``, ``argmin_``, ``uses_``,
    ``converged_``, ``result_``.
    """

    def __init__(self, epsilon=0.01, g_init=0.1, delta=0.05, eta_init=0.1, sigma_init=0.3,
                 lam=None, restarts=3, theta=0.7, alpha=1 / math.sqrt(2), max_iterations=2000,
                 random_state=None):
        self.epsilon = epsilon
        self.g_init = g_init
        self.delta = delta
        self.eta_init = eta_init
        self.sigma_init = sigma_init
        self.lam = lam
        self.restarts = restarts
        self.theta = theta
        self.alpha = alpha
        self.max_iterations = max_iterations
        self.random_state = random_state

    def fit(self, box, y=None):
        cfg = GfmConfig(g_init=self.g_init, delta=self.delta, eta_init=self.eta_init,
                        sigma_init=self.sigma_init, lam=self.lam, restarts=self.restarts,
                        theta=self.theta, alpha=self.alpha, max_iterations=self.max_iterations)
        res = run_gfm(box, self.epsilon, cfg, check_random_state(self.random_state))
        self.result_ = res
        self.f_min_ = res.f_min_estimate
        self.argmin_ = res.argmin
        self.uses_ = res.uses
        self.converged_ = res.converged
        return self


class QptEstimator(BaseEstimator):
    """Doubling-schedule tomography with the ``F_min`` stopping rule.

    Attributes after ``fit``: ``f_min_``, ``sigma_``, ``uses_``,
    ``converged_``, ``result_``.
    """

    def __init__(self, epsilon=0.01, base_shots=32, g_thres=None, bootstrap_B=50, cg_restarts=10,
                 bootstrap_cg_restarts=2, max_rounds=18, random_state=None):
        self.epsilon = epsilon
        self.base_shots = base_shots
        self.g_thres = g_thres
        self.bootstrap_B = bootstrap_B
        self.cg_restarts = cg_restarts
        self.bootstrap_cg_restarts = bootstrap_cg_restarts
        self.max_rounds = max_rounds
        self.random_state = random_state

    def fit(self, box, y=None):
        cfg = QptConfig(base_shots=self.base_shots, g_thres=self.g_thres, bootstrap_B=self.bootstrap_B,
                        cg_restarts=self.cg_restarts, bootstrap_cg_restarts=self.bootstrap_cg_restarts,
                        max_rounds=self.max_rounds)
        res = run_qpt_estimation(box, self.epsilon, cfg, check_random_state(self.random_state))
        self.result_ = res
        self.f_min_ = res.f_min_estimate
        self.sigma_ = res.sigma_hat
        self.uses_ = res.uses
        self.converged_ = res.converged
        return self
