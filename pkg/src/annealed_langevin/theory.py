"""Closed-form Gaussian bridging distributions and their Langevin-relevant constants.

Provides exact bridging moments for the gaussian task kind, Gaussian-proxy
bridges for everything else, log-concavity/smoothness constants (exact scalar
formulas in the Gaussian case, interval-arithmetic composition otherwise),
the analytic 2-Wasserstein distance between Gaussians, and the propagation of
log-Lipschitz regularity through the forward diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .composite import CompositeSpec, _check_method, _precisions_at, diffuse_covariance
from .schedule import Schedule, alpha as schedule_alpha, v as schedule_v
from .tasks import GaussianDist, Task

__all__ = [
    "BridgingConstants",
    "bridging_moments",
    "compose_gaussians",
    "proxy_bridge",
    "gaussian_constants",
    "constant_gap",
    "gaussian_w2",
    "propagate_smoothness",
    "composite_smoothness",
]

_EIG_CLAMP = 1e-12
_COMMUTE_TOL = 1e-10


@dataclass(frozen=True)
class BridgingConstants:
    """Two-sided Hessian bounds m*I <= -hessian(log pi_t) <= M*I at one level."""

    t: float
    m: float
    M: float
    method: str

    def __post_init__(self) -> None:
        _check_method(self.method)
        if not self.M > 0:
            raise ValueError("smoothness constant must be positive")
        if self.m > self.M:
            raise ValueError("log-concavity constant cannot exceed smoothness constant")

    @property
    def is_log_concave(self) -> bool:
        return self.m > 0


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _spd_inverse(mat: np.ndarray, label: str) -> np.ndarray:
    try:
        factor = cho_factor(mat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{label} is not positive definite") from exc
    return _symmetrize(cho_solve(factor, np.eye(mat.shape[0])))


def bridging_moments(task: Task, method: str, t: float, s: Schedule) -> GaussianDist:
    """Exact mean/covariance of the level-t bridging density for a gaussian task.

    linhart bridges are the diffused multi-observation posterior; geffner
    bridges are the precision-reweighted product of diffused individual
    posteriors against the diffused prior.
    """
    _check_method(method)
    if task.kind != "gaussian":
        raise NotImplementedError("analytic bridging moments require the gaussian task kind")
    if task.n < 1:
        raise ValueError("need at least one observation")
    n, d = task.n, task.dim
    sigma = task.likelihood_cov
    eye = np.eye(d)
    a = schedule_alpha(s, t)
    v = 1.0 - a
    x_sum = task.observations.sum(axis=0)
    if method == "linhart":
        post_n = np.linalg.solve(n * eye + sigma, sigma)  # (n*inv(Sigma)+I)^{-1}
        cov = a * post_n + v * eye
        mean = math.sqrt(a) * np.linalg.solve(n * eye + sigma, x_sum)
        return GaussianDist(mean=mean, cov=_symmetrize(cov))
    post_1 = np.linalg.solve(eye + sigma, sigma)  # single-observation posterior cov
    diffused = a * post_1 + v * eye
    precision = (1 - n) * eye + n * _spd_inverse(diffused, "diffused posterior covariance")
    cov = _spd_inverse(precision, "bridge precision")
    lifted = np.linalg.solve(diffused, np.linalg.solve(eye + sigma, x_sum))
    mean = math.sqrt(a) * cov @ lifted
    return GaussianDist(mean=mean, cov=cov)


def compose_gaussians(
    prior_proxy: GaussianDist, post_proxies: Sequence[GaussianDist]
) -> GaussianDist:
    """Gaussian with precision sum(P_i) + (1-n)*P_prior and the matching mean.

    This is the product-of-Gaussians normalization of prior^(1-n) * prod_i
    posterior_i; a non-positive-definite composed precision is an error.
    """
    n = len(post_proxies)
    if n < 1:
        raise ValueError("need at least one posterior proxy")
    d = prior_proxy.dim
    if any(p.dim != d for p in post_proxies):
        raise ValueError("proxy dimensions disagree")
    prior_prec = _spd_inverse(prior_proxy.cov, "prior proxy covariance")
    precision = (1 - n) * prior_prec
    rhs = (1 - n) * prior_prec @ prior_proxy.mean
    for proxy in post_proxies:
        prec = _spd_inverse(proxy.cov, "posterior proxy covariance")
        precision += prec
        rhs += prec @ proxy.mean
    try:
        factor = cho_factor(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("composed precision is not positive definite") from exc
    cov = _symmetrize(cho_solve(factor, np.eye(d)))
    return GaussianDist(mean=cho_solve(factor, rhs), cov=cov)


def proxy_bridge(
    prior_proxy: GaussianDist,
    post_proxies: Sequence[GaussianDist],
    method: str,
    t: float,
    s: Schedule,
) -> GaussianDist:
    """Level-t bridging Gaussian built from moment-matched proxies.

    geffner reweights the diffused proxies at level t; linhart composes the
    time-0 proxies first and diffuses the result.
    """
    _check_method(method)
    n = len(post_proxies)
    if n < 1:
        raise ValueError("need at least one posterior proxy")
    d = prior_proxy.dim
    if any(p.dim != d for p in post_proxies):
        raise ValueError("proxy dimensions disagree")
    a = schedule_alpha(s, t)
    if method == "linhart":
        composed = compose_gaussians(prior_proxy, post_proxies)
        cov = a * composed.cov + (1.0 - a) * np.eye(d)
        return GaussianDist(mean=math.sqrt(a) * composed.mean, cov=_symmetrize(cov))
    root_a = math.sqrt(a)
    prior_prec = _spd_inverse(diffuse_covariance(prior_proxy.cov, t, s), "diffused prior proxy")
    precision = (1 - n) * prior_prec
    rhs = (1 - n) * prior_prec @ (root_a * prior_proxy.mean)
    for proxy in post_proxies:
        prec = _spd_inverse(diffuse_covariance(proxy.cov, t, s), "diffused posterior proxy")
        precision += prec
        rhs += prec @ (root_a * proxy.mean)
    try:
        factor = cho_factor(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"bridge precision is not positive definite at t={t:g}") from exc
    cov = _symmetrize(cho_solve(factor, np.eye(d)))
    return GaussianDist(mean=cho_solve(factor, rhs), cov=cov)


def gaussian_constants(
    sigma_min: float, sigma_max: float, n: int, t: float, method: str, s: Schedule
) -> BridgingConstants:
    """Exact scalar (m, M) for gaussian-task bridges from the likelihood eigenvalue range."""
    _check_method(method)
    if not 0 < sigma_min <= sigma_max:
        raise ValueError("need 0 < sigma_min <= sigma_max")
    if n < 1:
        raise ValueError("need at least one observation")
    v = schedule_v(s, t)
    m0 = (n + sigma_max) / sigma_max
    big_m0 = (n + sigma_min) / sigma_min
    if method == "linhart":
        big_m = big_m0 * sigma_min / (sigma_min + n * v)
        m = m0 * sigma_max / (sigma_max + n * v)
    else:
        big_m = big_m0 * sigma_min / (sigma_min + v) + (1 - n) * v / (sigma_min + v)
        m = m0 * sigma_max / (sigma_max + v) + (1 - n) * v / (sigma_max + v)
    return BridgingConstants(t=t, m=m, M=big_m, method=method)


def constant_gap(sigma: float, n: int, t: float, s: Schedule) -> float:
    """Exact geffner-minus-linhart difference of the scalar constants at one eigenvalue.

    M_geffner = M_linhart + gap(sigma_min) and m_geffner = m_linhart +
    gap(sigma_max).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n < 1:
        raise ValueError("need at least one observation")
    a = schedule_alpha(s, t)
    v = 1.0 - a
    return n * (n - 1) * a * v / ((sigma + v) * (sigma + n * v))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, q = eigh(mat)
    w = np.clip(w, _EIG_CLAMP, None)
    return (q * np.sqrt(w)) @ q.T


def gaussian_w2(a: GaussianDist, b: GaussianDist) -> float:
    """Analytic 2-Wasserstein distance between two Gaussians.

    Commuting covariances (commutator Frobenius norm < 1e-10) take the cheap
    Frobenius-of-square-roots path; otherwise the general Bures term is used.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    shift = float(np.sum((a.mean - b.mean) ** 2))
    commutator = a.cov @ b.cov - b.cov @ a.cov
    if np.linalg.norm(commutator, "fro") < _COMMUTE_TOL:
        diff = _psd_sqrt(a.cov) - _psd_sqrt(b.cov)
        bures = float(np.sum(diff * diff))
    else:
        root = _psd_sqrt(a.cov)
        cross = _psd_sqrt(root @ b.cov @ root)
        bures = float(np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return math.sqrt(max(shift + bures, 0.0))


def propagate_smoothness(L: float, t: float, s: Schedule) -> tuple[float, float]:
    """Hessian bounds of a diffused log-Lipschitz density at time t.

    Returns (lower, upper) with lower = 1 - R_t and upper = R_t + L^2 *
    alpha_t + 1, where R_t = 5 * L * alpha_t^(3/2) * (L + 1/sqrt(log(1/alpha_t)/2)).
    """
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    if t <= 0:
        raise ValueError("t must be positive")
    a = schedule_alpha(s, t)
    if L == 0:
        return (1.0, 1.0)
    half_log = -0.5 * math.log(a)
    r = 5.0 * L * a**1.5 * (L + 1.0 / math.sqrt(half_log))
    return (1.0 - r, r + L * L * a + 1.0)


def _eig_range(mat: np.ndarray) -> tuple[float, float]:
    w = np.linalg.eigvalsh(mat)
    return float(w[0]), float(w[-1])


def composite_smoothness(
    post_bounds: Sequence[tuple[float, float]],
    prior_bounds: tuple[float, float],
    spec: CompositeSpec,
    method: str,
    t: float,
) -> BridgingConstants:
    """Two-sided Hessian bounds for the composite bridging density at time t.

    Inputs are per-field bounds (m_i, M_i) on -hessian(log p_t(.|x_i)) and
    (m_prior, M_prior) for the diffused prior. geffner composes them with
    unit weights; linhart weights each field by the eigenvalue range of its
    diffused covariance proxy and of the mixing matrix, picking the
    sign-appropriate endpoint. A nonpositive m is a flagged outcome (the
    is_log_concave property), not an error.
    """
    _check_method(method)
    n = spec.n
    if len(post_bounds) != n:
        raise ValueError(f"expected {n} posterior bound pairs, got {len(post_bounds)}")
    for lo, hi in [*post_bounds, prior_bounds]:
        if lo > hi:
            raise ValueError("lower Hessian bound exceeds upper bound")
        if hi <= 0:
            raise ValueError("upper Hessian bound must be positive")
    m_prior, big_m_prior = prior_bounds
    if n == 1:
        # prior weight vanishes and the single mixing weight cancels exactly
        lo, hi = post_bounds[0]
        return BridgingConstants(t=t, m=lo, M=hi, method=method)
    if method == "geffner":
        m_tilde = sum(lo for lo, _ in post_bounds) + (1 - n) * big_m_prior
        big_m_tilde = sum(hi for _, hi in post_bounds) + (1 - n) * m_prior
        return BridgingConstants(t=t, m=m_tilde, M=big_m_tilde, method=method)
    post_prec, prior_prec = _precisions_at(spec, t)
    # eigenvalue ranges of the backward-kernel covariances (inverted precisions)
    post_ranges = []
    for i in range(n):
        p_lo, p_hi = _eig_range(post_prec[i])
        post_ranges.append((1.0 / p_hi, 1.0 / p_lo))
    p_lo, p_hi = _eig_range(prior_prec)
    prior_lo, prior_hi = 1.0 / p_hi, 1.0 / p_lo
    lam = post_prec.sum(axis=0) + (1 - n) * prior_prec
    lam_lo, lam_hi = _eig_range(lam)
    if lam_lo <= 0:
        raise ValueError(f"lambda matrix is not positive definite at t={t:g}")
    m_inner = (1 - n) * big_m_prior / prior_lo
    big_m_inner = (1 - n) * (m_prior / prior_hi if m_prior >= 0 else m_prior / prior_lo)
    for (lo, hi), (smin, smax) in zip(post_bounds, post_ranges):
        m_inner += lo / smax if lo >= 0 else lo / smin
        big_m_inner += hi / smin
    m_tilde = m_inner / lam_hi if m_inner >= 0 else m_inner / lam_lo
    big_m_tilde = big_m_inner / lam_lo if big_m_inner >= 0 else big_m_inner / lam_hi
    return BridgingConstants(t=t, m=m_tilde, M=big_m_tilde, method=method)
