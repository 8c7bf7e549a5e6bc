"""Estimating the minimum gate fidelity of a noisy quantum gate.

Two schemes are provided: a CMA-ES descent driven by direct fidelity
estimates, and process tomography with an ``F_min``-based stopping rule.
Both query a simulated black box and are scored against an exact oracle.
"""
from .blackbox import BlackBoxView, NoisyGateBlackBox, as_view
from .channels import (
    QuantumChannel,
    class_pa_channel,
    depolarizing_channel,
    erasure_channel,
    erasure_family,
    identity_channel,
    random_hs_channel,
)
from .dtfe import DtfeParams, estimate_fidelity, expected_cost
from .estimators import GfmEstimator, QptEstimator
from .gfm import GfmConfig, GfmResult, run_gfm
from .oracle import exact_fidelity, exact_fmin, fidelity_via_choi, fmin_bound_check
from .qpt import CountsTable, QptConfig, QptResult, project_cptp, run_qpt_estimation

__version__ = "0.1.0"

__all__ = [
    "BlackBoxView",
    "CountsTable",
    "DtfeParams",
    "GfmConfig",
    "GfmEstimator",
    "GfmResult",
    "NoisyGateBlackBox",
    "QptConfig",
    "QptEstimator",
    "QptResult",
    "QuantumChannel",
    "as_view",
    "class_pa_channel",
    "depolarizing_channel",
    "erasure_channel",
    "erasure_family",
    "estimate_fidelity",
    "exact_fidelity",
    "exact_fmin",
    "expected_cost",
    "fidelity_via_choi",
    "fmin_bound_check",
    "identity_channel",
    "project_cptp",
    "random_hs_channel",
    "run_gfm",
    "run_qpt_estimation",
]
