"""Shared helpers for the test suite."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import brentq

from annealed_langevin import Schedule, alpha, gaussian_task, v
from annealed_langevin.tasks import Task


@pytest.fixture(scope="session")
def sched() -> Schedule:
    return Schedule()


def t_for_alpha(s: Schedule, target: float) -> float:
    """Invert alpha(t) = target on (0, 1)."""
    return float(brentq(lambda t: alpha(s, t) - target, 1e-12, 1.0, xtol=1e-15))


def t_for_v(s: Schedule, target: float) -> float:
    """Invert v(t) = target on (0, 1)."""
    return float(brentq(lambda t: v(s, t) - target, 1e-12, 1.0, xtol=1e-15))


def fd_grad(log_density, theta: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central finite difference of a scalar log density at one point."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for j in range(theta.size):
        hi = theta.copy()
        lo = theta.copy()
        hi[j] += step
        lo[j] -= step
        f_hi = float(np.asarray(log_density(hi[None, :])).reshape(()))
        f_lo = float(np.asarray(log_density(lo[None, :])).reshape(()))
        out[j] = (f_hi - f_lo) / (2.0 * step)
    return out


def rand_spd(rng: np.random.Generator, dim: int, lo: float, hi: float) -> np.ndarray:
    """Random SPD matrix with eigenvalues log-uniform in [lo, hi]."""
    eigs = np.exp(rng.uniform(np.log(lo), np.log(hi), size=dim))
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    mat = (q * eigs) @ q.T
    return 0.5 * (mat + mat.T)


def make_gaussian_task(seed: int, dim: int, n: int, lo: float = 0.02, hi: float = 0.1) -> Task:
    """Deterministic gaussian task: seeded SPD likelihood plus simulated data."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, dim, n)))
    cov = rand_spd(rng, dim, lo, hi)
    theta_star = rng.standard_normal(dim)
    obs = theta_star + rng.multivariate_normal(np.zeros(dim), cov, size=n)
    return gaussian_task(cov, obs)
