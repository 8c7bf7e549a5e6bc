"""The fidelity function ``f(psi) = <psi|E(psi)|psi>`` on real state parameters.

Everything is evaluated from the Choi state through
``f(psi) = d <conj(psi), psi| J |conj(psi), psi>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._utils import check_random_state
from .channels import QuantumChannel
from .quantum import (
    SINGLE_QUBIT_PAULIS,
    canonical_phase,
    haar_random_state,
    param_to_state,
    state_to_param,
)


def _as_choi(channel_or_choi) -> np.ndarray:
    if isinstance(channel_or_choi, QuantumChannel):
        return channel_or_choi.choi
    J = np.asarray(channel_or_choi, dtype=complex)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("expected a channel or a square Choi matrix")
    return J


class FidelityLandscape:
    """``f`` and its gradient with respect to the ``2d`` real parameters."""

    def __init__(self, channel_or_choi):
        J = _as_choi(channel_or_choi)
        d = int(round(np.sqrt(J.shape[0])))
        if d * d != J.shape[0]:
            raise ValueError("Choi matrix dimension is not a square")
        self.dim = d
        # T[a, b, c, e] = J[(a, b), (c, e)]: input a/c, output b/e
        self._T = d * J.reshape(d, d, d, d)

    def fidelity(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        return float(np.einsum("a,b,abce,c,e->", psi, psi.conj(), self._T, psi.conj(), psi).real)

    def fidelities(self, psis) -> np.ndarray:
        """Vectorized ``f`` over rows of ``psis``."""
        psis = np.asarray(psis, dtype=complex)
        rho = np.einsum("sa,abce,sc->sbe", psis, self._T, psis.conj())
        return np.einsum("sb,sbe,se->s", psis.conj(), rho, psis).real

    def value_and_grad(self, ell):
        ell = np.asarray(ell, dtype=float)
        z = ell[0::2] + 1j * ell[1::2]
        N = float(np.vdot(z, z).real)
        T = self._T
        zc = z.conj()
        rho = np.einsum("a,abce,c->be", z, T, zc)  # unnormalized E(|z><z|)
        g = float(np.vdot(z, rho @ z).real)
        # Wirtinger derivative d g / d conj(z)
        dg = np.einsum("a,b,abke->ke", z, zc, T) @ z + rho @ z
        dz = dg / N**2 - 2 * g * z / N**3
        grad = np.empty_like(ell)
        grad[0::2] = 2 * dz.real
        grad[1::2] = 2 * dz.imag
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite fidelity gradient; is the channel valid?")
        return g / N**2, grad

    def value(self, ell) -> float:
        return self.value_and_grad(ell)[0]


@dataclass(frozen=True)
class LocalMinimum:
    f: float
    psi: np.ndarray
    converged: bool


def _cg_descent(landscape: FidelityLandscape, x0, tol: float, maxiter: int) -> LocalMinimum:
    res = optimize.minimize(
        landscape.value_and_grad,
        np.asarray(x0, dtype=float),
        jac=True,
        method="CG",
        options={"gtol": tol, "maxiter": maxiter},
    )
    x = res.x / np.linalg.norm(res.x)
    f, grad = landscape.value_and_grad(x)
    converged = bool(res.success) or np.linalg.norm(grad) < 10 * tol
    return LocalMinimum(f=float(f), psi=canonical_phase(param_to_state(x)), converged=converged)


def multistart_cg(channel_or_choi, restarts=10, tol=1e-8, rng=None, starts=(), maxiter=2000):
    """Nonlinear CG (Polak-Ribiere, Wolfe line search) from several starts.

    ``starts`` are extra state vectors tried before the ``restarts``
    Haar-random ones. Returns the list of local minima, best first.
    """
    landscape = channel_or_choi if isinstance(channel_or_choi, FidelityLandscape) else FidelityLandscape(channel_or_choi)
    rng = check_random_state(rng)
    found = []
    for psi in starts:
        found.append(_cg_descent(landscape, state_to_param(psi), tol, maxiter))
    for _ in range(restarts):
        x0 = state_to_param(haar_random_state(landscape.dim, rng))
        found.append(_cg_descent(landscape, x0, tol, maxiter))
    if not found:
        raise ValueError("need at least one start")
    found.sort(key=lambda m: m.f)
    return found


def minimize_fidelity_cg(channel_or_choi, restarts=10, tol=1e-8, rng=None, starts=()):
    """Smallest ``f`` found by multistart CG; returns ``(f_min, argmin_state)``."""
    best = multistart_cg(channel_or_choi, restarts=restarts, tol=tol, rng=rng, starts=starts)[0]
    return min(max(best.f, 0.0), 1.0), best.psi


def bloch_map(channel_or_choi):
    """Affine Bloch action ``r -> M r + t`` of a qubit channel."""
    J = _as_choi(channel_or_choi)
    if J.shape != (4, 4):
        raise ValueError("Bloch map is only defined for qubit channels")
    T = 2 * J.reshape(2, 2, 2, 2)
    P = SINGLE_QUBIT_PAULIS

    def out(X):
        return np.einsum("ac,abce->be", X, T)

    t = np.array([0.5 * np.trace(P[i] @ out(P[0])).real for i in (1, 2, 3)])
    M = np.array([[0.5 * np.trace(P[i] @ out(P[j])).real for j in (1, 2, 3)] for i in (1, 2, 3)])
    return M, t


def fibonacci_sphere(n_points: int) -> np.ndarray:
    i = np.arange(n_points) + 0.5
    z = 1 - 2 * i / n_points
    r = np.sqrt(1 - z**2)
    phi = np.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def bloch_grid_minimum(channel_or_choi, n_points: int = 1_000_000, chunk: int = 250_000):
    """Brute-force minimum of ``f = (1 + r.(M r + t))/2`` over a Bloch-sphere grid."""
    M, t = bloch_map(channel_or_choi)
    best_f, best_r = np.inf, None
    pts = fibonacci_sphere(n_points)
    for start in range(0, n_points, chunk):
        r = pts[start : start + chunk]
        f = 0.5 * (1 + np.einsum("si,si->s", r, r @ M.T + t))
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_r = float(f[k]), r[k]
    return best_f, best_r
