"""Analytic inference problems with exact diffused scores and exact posterior sampling.

Three task kinds are supported:

- ``gaussian``: standard normal prior, Gaussian likelihood N(x; theta, Sigma).
- ``gmm_prior``: two-component Gaussian-mixture prior, Gaussian likelihood.
- ``gmm_likelihood``: standard normal prior, two-component mixture likelihood
  whose components share a base covariance up to scalar variance multipliers.

Every per-observation posterior is a finite Gaussian mixture, so diffused
scores, moments and ground-truth joint samples are all available in closed
form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .sampler import SampleSet
from .schedule import Schedule, alpha as schedule_alpha

__all__ = [
    "KINDS",
    "ScoreField",
    "GaussianDist",
    "GaussianMixture",
    "Task",
    "gaussian_task",
    "gmm_prior_task",
    "gmm_likelihood_task",
    "simulate_observations",
    "prior_dist",
    "prior_score",
    "prior_log_density",
    "individual_posterior_score",
    "individual_scores",
    "posterior_log_density",
    "posterior_mixture",
    "posterior_moments",
    "joint_posterior_mixture",
    "exact_posterior_sample",
]

KINDS = ("gaussian", "gmm_prior", "gmm_likelihood")

# A score field maps (theta batch, time) to gradients of the same shape.
ScoreField = Callable[[np.ndarray, float], np.ndarray]

_LOG_2PI = math.log(2.0 * math.pi)


def _as_spd(cov: np.ndarray, name: str) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} must be positive definite") from exc
    return cov


@dataclass(frozen=True)
class GaussianDist:
    """Mean vector and SPD covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        cov = _as_spd(self.cov, "cov")
        if cov.shape[0] != mean.size:
            raise ValueError("mean and cov dimensions disagree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def log_pdf(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        delta = theta - self.mean
        factor = cho_factor(self.cov, lower=True)
        sol = cho_solve(factor, delta.reshape(-1, self.dim).T).T.reshape(delta.shape)
        logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
        quad = np.sum(delta * sol, axis=-1)
        return -0.5 * (quad + logdet + self.dim * _LOG_2PI)

    def score(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        delta = theta - self.mean
        factor = cho_factor(self.cov, lower=True)
        sol = cho_solve(factor, delta.reshape(-1, self.dim).T).T.reshape(delta.shape)
        return -sol

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        chol = np.linalg.cholesky(self.cov)
        return self.mean + rng.standard_normal((count, self.dim)) @ chol.T


@dataclass(frozen=True)
class GaussianMixture:
    """Finite Gaussian mixture: weights (K,), means (K, d), covariances (K, d, d)."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if w.ndim != 1 or means.ndim != 2 or covs.ndim != 3:
            raise ValueError("expected weights (K,), means (K, d), covs (K, d, d)")
        if not (w.size == means.shape[0] == covs.shape[0]):
            raise ValueError("component counts disagree")
        if np.any(w < 0.0) or not math.isclose(float(w.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        for k in range(covs.shape[0]):
            _as_spd(covs[k], f"covs[{k}]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def component_count(self) -> int:
        return self.weights.size

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Moment-matched (mean, covariance) by the law of total covariance."""
        mean = self.weights @ self.means
        centered = self.means - mean
        cov = np.einsum("k,kij->ij", self.weights, self.covs)
        cov = cov + np.einsum("k,ki,kj->ij", self.weights, centered, centered)
        return mean, 0.5 * (cov + cov.T)

    def _component_log_pdfs(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        out = np.empty((self.component_count, theta.shape[0]))
        for k in range(self.component_count):
            out[k] = GaussianDist(self.means[k], self.covs[k]).log_pdf(theta)
        return out

    def log_pdf(self, theta: np.ndarray) -> np.ndarray:
        theta_arr = np.asarray(theta, dtype=float)
        comp = self._component_log_pdfs(theta_arr)
        out = logsumexp(comp + np.log(self.weights)[:, None], axis=0)
        return out[0] if theta_arr.ndim == 1 else out

    def score(self, theta: np.ndarray) -> np.ndarray:
        theta_arr = np.asarray(theta, dtype=float)
        theta2d = np.atleast_2d(theta_arr)
        comp = self._component_log_pdfs(theta2d) + np.log(self.weights)[:, None]
        resp = np.exp(comp - logsumexp(comp, axis=0, keepdims=True))  # (K, N)
        out = np.zeros_like(theta2d)
        for k in range(self.component_count):
            out += resp[k][:, None] * GaussianDist(self.means[k], self.covs[k]).score(theta2d)
        return out[0] if theta_arr.ndim == 1 else out

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        choice = rng.choice(self.component_count, size=count, p=self.weights)
        z = rng.standard_normal((count, self.dim))
        out = np.empty((count, self.dim))
        for k in range(self.component_count):
            mask = choice == k
            if mask.any():
                chol = np.linalg.cholesky(self.covs[k])
                out[mask] = self.means[k] + z[mask] @ chol.T
        return out


@dataclass(frozen=True)
class Task:
    """One inference problem: prior, likelihood and the conditioning observations."""

    kind: str
    dim: int
    observations: np.ndarray  # (n, dim)
    likelihood_cov: np.ndarray  # (dim, dim) base covariance
    prior_means: np.ndarray | None = None  # (K, dim), gmm_prior only
    prior_scales: np.ndarray | None = None  # (K,) component std devs, gmm_prior only
    prior_weights: np.ndarray | None = None  # (K,), gmm_prior only
    likelihood_cov_scales: np.ndarray | None = None  # (K,) variance factors, gmm_likelihood only
    likelihood_weights: np.ndarray | None = None  # (K,), gmm_likelihood only

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 2 or obs.shape[1] != self.dim:
            raise ValueError("observations must be an (n, dim) matrix")
        cov = _as_spd(self.likelihood_cov, "likelihood_cov")
        if cov.shape[0] != self.dim:
            raise ValueError("likelihood_cov dimension disagrees with dim")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "likelihood_cov", cov)
        if self.kind == "gmm_prior":
            means = np.asarray(self.prior_means, dtype=float)
            scales = np.asarray(self.prior_scales, dtype=float)
            weights = _checked_weights(self.prior_weights)
            if means.ndim != 2 or means.shape[1] != self.dim:
                raise ValueError("prior_means must be (K, dim)")
            if scales.shape != (means.shape[0],) or np.any(scales <= 0):
                raise ValueError("prior_scales must be K positive values")
            if weights.size != means.shape[0]:
                raise ValueError("prior component counts disagree")
            object.__setattr__(self, "prior_means", means)
            object.__setattr__(self, "prior_scales", scales)
            object.__setattr__(self, "prior_weights", weights)
        if self.kind == "gmm_likelihood":
            scales = np.asarray(self.likelihood_cov_scales, dtype=float)
            weights = _checked_weights(self.likelihood_weights)
            if scales.ndim != 1 or np.any(scales <= 0):
                raise ValueError("likelihood_cov_scales must be positive")
            if weights.size != scales.size:
                raise ValueError("likelihood component counts disagree")
            object.__setattr__(self, "likelihood_cov_scales", scales)
            object.__setattr__(self, "likelihood_weights", weights)

    @property
    def n(self) -> int:
        return self.observations.shape[0]


def _checked_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not math.isclose(float(w.sum()), 1.0, abs_tol=1e-9):
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    return w


def gaussian_task(likelihood_cov: np.ndarray, observations: np.ndarray) -> Task:
    """Standard normal prior with likelihood N(x; theta, likelihood_cov)."""
    cov = np.asarray(likelihood_cov, dtype=float)
    return Task(kind="gaussian", dim=cov.shape[0], observations=observations, likelihood_cov=cov)


def gmm_prior_task(
    likelihood_cov: np.ndarray,
    observations: np.ndarray,
    prior_means: np.ndarray = ((0.0, 0.0), (1.0, 1.0)),
    prior_scales=(0.5, 0.5),
    prior_weights=(0.5, 0.5),
) -> Task:
    """Gaussian-mixture prior (isotropic components) with a Gaussian likelihood."""
    cov = np.asarray(likelihood_cov, dtype=float)
    return Task(
        kind="gmm_prior",
        dim=cov.shape[0],
        observations=observations,
        likelihood_cov=cov,
        prior_means=prior_means,
        prior_scales=prior_scales,
        prior_weights=prior_weights,
    )


def gmm_likelihood_task(
    observations: np.ndarray,
    base_cov: np.ndarray | None = None,
    cov_scales=(2.25, 1.0 / 9.0),
    weights=(0.5, 0.5),
    dim: int = 10,
) -> Task:
    """Standard normal prior with a two-component scaled-covariance mixture likelihood.

    The default base covariance is diagonal with entries linearly spaced
    between 0.6 and 1.4.
    """
    if base_cov is None:
        base_cov = np.diag(np.linspace(0.6, 1.4, dim))
    cov = np.asarray(base_cov, dtype=float)
    return Task(
        kind="gmm_likelihood",
        dim=cov.shape[0],
        observations=observations,
        likelihood_cov=cov,
        likelihood_cov_scales=cov_scales,
        likelihood_weights=weights,
    )


def prior_dist(task: Task) -> GaussianDist | GaussianMixture:
    """The prior as an explicit distribution object."""
    if task.kind == "gmm_prior":
        eye = np.eye(task.dim)
        covs = np.array([s * s * eye for s in task.prior_scales])
        return GaussianMixture(task.prior_weights, task.prior_means, covs)
    return GaussianDist(np.zeros(task.dim), np.eye(task.dim))


def simulate_observations(task: Task, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw theta* from the prior, then count i.i.d. observations from the likelihood."""
    if count < 1:
        raise ValueError("need at least one observation")
    theta_star = prior_dist(task).sample(1, rng)[0]
    if task.kind == "gmm_likelihood":
        choice = rng.choice(task.likelihood_cov_scales.size, size=count, p=task.likelihood_weights)
        chols = [np.linalg.cholesky(s * task.likelihood_cov) for s in task.likelihood_cov_scales]
        z = rng.standard_normal((count, task.dim))
        return np.array([theta_star + chols[k] @ z[i] for i, k in enumerate(choice)])
    chol = np.linalg.cholesky(task.likelihood_cov)
    return theta_star + rng.standard_normal((count, task.dim)) @ chol.T


# ---------------------------------------------------------------------------
# Per-observation posterior mixtures (time 0)


def _check_index(task: Task, i: int) -> int:
    if not 0 <= i < task.n:
        raise ValueError(f"observation index {i} out of range for n={task.n}")
    return i


def posterior_mixture(task: Task, i: int) -> GaussianMixture:
    """Exact mixture decomposition of the single-observation posterior p(theta | x_i)."""
    _check_index(task, i)
    x = task.observations[i]
    d = task.dim
    eye = np.eye(d)
    sigma = task.likelihood_cov
    if task.kind == "gaussian":
        factor = cho_factor(sigma + eye, lower=True)
        cov = cho_solve(factor, sigma)
        cov = 0.5 * (cov + cov.T)
        mean = cho_solve(factor, x)
        return GaussianMixture(np.ones(1), mean[None, :], cov[None, :, :])
    if task.kind == "gmm_prior":
        K = task.prior_weights.size
        means = np.empty((K, d))
        covs = np.empty((K, d, d))
        log_w = np.empty(K)
        for k in range(K):
            s2 = float(task.prior_scales[k] ** 2)
            factor = cho_factor(sigma + s2 * eye, lower=True)
            cov = s2 * cho_solve(factor, sigma)
            covs[k] = 0.5 * (cov + cov.T)
            means[k] = cho_solve(factor, sigma @ task.prior_means[k] + s2 * x)
            marginal = GaussianDist(task.prior_means[k], s2 * eye + sigma)
            log_w[k] = np.log(task.prior_weights[k]) + marginal.log_pdf(x)
        weights = np.exp(log_w - logsumexp(log_w))
        return GaussianMixture(weights / weights.sum(), means, covs)
    # gmm_likelihood
    K = task.likelihood_weights.size
    means = np.empty((K, d))
    covs = np.empty((K, d, d))
    log_w = np.empty(K)
    for k in range(K):
        sig_k = float(task.likelihood_cov_scales[k]) * sigma
        factor = cho_factor(sig_k + eye, lower=True)
        cov = cho_solve(factor, sig_k)
        covs[k] = 0.5 * (cov + cov.T)
        means[k] = cho_solve(factor, x)
        marginal = GaussianDist(np.zeros(d), eye + sig_k)
        log_w[k] = np.log(task.likelihood_weights[k]) + marginal.log_pdf(x)
    weights = np.exp(log_w - logsumexp(log_w))
    return GaussianMixture(weights / weights.sum(), means, covs)


def posterior_moments(
    task: Task, i: int | None = None
) -> tuple[np.ndarray, np.ndarray, GaussianMixture]:
    """Exact moments (and mixture decomposition) of p(theta | x_i), or of the joint.

    i=None requests the multi-observation posterior, which is only available
    in closed single-Gaussian form for the gaussian kind; other kinds raise
    (sample the joint with exact_posterior_sample instead).
    """
    if i is not None:
        mixture = posterior_mixture(task, i)
        mean, cov = mixture.moments()
        return mean, cov, mixture
    if task.kind != "gaussian":
        raise NotImplementedError(
            "joint moments are only closed-form for the gaussian kind; "
            "use exact_posterior_sample"
        )
    if task.n < 1:
        raise ValueError("need at least one observation")
    d = task.dim
    sigma = task.likelihood_cov
    factor = cho_factor(sigma + task.n * np.eye(d), lower=True)
    cov = cho_solve(factor, sigma)
    cov = 0.5 * (cov + cov.T)
    mean = cho_solve(factor, task.observations.sum(axis=0))
    return mean, cov, GaussianMixture(np.ones(1), mean[None, :], cov[None, :, :])


def joint_posterior_mixture(task: Task, component_cap: int = 4096) -> GaussianMixture:
    """Exact finite-mixture form of p(theta | x_{1:n}).

    gaussian: one component. gmm_prior: one component per prior component
    (the Gaussian likelihood product collapses to a single kernel).
    gmm_likelihood: one component per assignment of a likelihood component to
    each observation; refuses above component_cap.
    """
    if task.n < 1:
        raise ValueError("need at least one observation")
    d = task.dim
    eye = np.eye(d)
    sigma = task.likelihood_cov
    n = task.n
    if task.kind == "gaussian":
        mean, cov, mixture = posterior_moments(task, None)
        return mixture
    if task.kind == "gmm_prior":
        x_sum = task.observations.sum(axis=0)
        x_bar = x_sum / n
        K = task.prior_weights.size
        means = np.empty((K, d))
        covs = np.empty((K, d, d))
        log_w = np.empty(K)
        for k in range(K):
            s2 = float(task.prior_scales[k] ** 2)
            factor = cho_factor(sigma + n * s2 * eye, lower=True)
            cov = s2 * cho_solve(factor, sigma)
            covs[k] = 0.5 * (cov + cov.T)
            means[k] = cho_solve(factor, sigma @ task.prior_means[k] + s2 * x_sum)
            marginal = GaussianDist(task.prior_means[k], s2 * eye + sigma / n)
            log_w[k] = np.log(task.prior_weights[k]) + marginal.log_pdf(x_bar)
        weights = np.exp(log_w - logsumexp(log_w))
        return GaussianMixture(weights / weights.sum(), means, covs)
    # gmm_likelihood: enumerate component assignments
    K = task.likelihood_weights.size
    total = K**n
    if total > component_cap:
        raise ValueError(
            f"joint posterior needs {total} components, above the cap {component_cap}"
        )
    precisions = np.empty((K, d, d))
    logdets = np.empty(K)
    for k in range(K):
        sig_k = float(task.likelihood_cov_scales[k]) * sigma
        factor = cho_factor(sig_k, lower=True)
        precisions[k] = cho_solve(factor, eye)
        logdets[k] = 2.0 * np.sum(np.log(np.diag(factor[0])))
    # per (observation, component): precision-weighted data and quadratic forms
    px = np.einsum("kij,nj->nki", precisions, task.observations)
    quad = np.einsum("ni,nki->nk", task.observations, px)
    log_wk = np.log(task.likelihood_weights)
    combos = list(itertools.product(range(K), repeat=n))
    means = np.empty((total, d))
    covs = np.empty((total, d, d))
    log_w = np.empty(total)
    idx = np.arange(n)
    for c, combo in enumerate(combos):
        combo = np.asarray(combo)
        lam = eye + precisions[combo].sum(axis=0)
        b = px[idx, combo].sum(axis=0)
        factor = cho_factor(lam, lower=True)
        cov = cho_solve(factor, eye)
        covs[c] = 0.5 * (cov + cov.T)
        means[c] = cho_solve(factor, b)
        logdet_lam = 2.0 * np.sum(np.log(np.diag(factor[0])))
        log_z = (
            -0.5 * (n * d * _LOG_2PI + logdets[combo].sum() + quad[idx, combo].sum())
            - 0.5 * logdet_lam
            + 0.5 * float(b @ means[c])
        )
        log_w[c] = log_wk[combo].sum() + log_z
    weights = np.exp(log_w - logsumexp(log_w))
    return GaussianMixture(weights / weights.sum(), means, covs)


def exact_posterior_sample(
    task: Task, count: int, seed: int, component_cap: int = 4096
) -> SampleSet:
    """I.i.d. ground-truth draws from p(theta | x_{1:n}), reproducible per seed."""
    if count < 1:
        raise ValueError("need at least one sample")
    mixture = joint_posterior_mixture(task, component_cap=component_cap)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    points = mixture.sample(count, rng)
    return SampleSet(points=points, level=0.0, seed=seed, steps_used=0)


# ---------------------------------------------------------------------------
# Diffused scores and log densities


def _diffused_prior(task: Task, t: float, s: Schedule) -> GaussianDist | GaussianMixture:
    base = prior_dist(task)
    a = schedule_alpha(s, t)
    v_t = 1.0 - a
    if isinstance(base, GaussianDist):
        # standard normal prior: alpha*I + v*I = I for every t
        cov = a * base.cov + v_t * np.eye(task.dim)
        return GaussianDist(np.sqrt(a) * base.mean, cov)
    covs = a * base.covs + v_t * np.eye(task.dim)
    return GaussianMixture(base.weights, np.sqrt(a) * base.means, covs)


def prior_score(task: Task, theta: np.ndarray, t: float, s: Schedule) -> np.ndarray:
    """Exact score of the diffused prior at time t."""
    theta = _check_theta(task, theta)
    return _diffused_prior(task, t, s).score(theta)


def prior_log_density(task: Task, theta: np.ndarray, t: float, s: Schedule) -> np.ndarray:
    """Log density of the diffused prior (finite-difference oracle target)."""
    theta = _check_theta(task, theta)
    return _diffused_prior(task, t, s).log_pdf(theta)


def _check_theta(task: Task, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != task.dim:
        raise ValueError("theta dimension disagrees with the task")
    return theta


def _stack_base_mixtures(
    task: Task, indices: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time-0 posterior mixtures for the given observations, stacked.

    Returns (log_weights (n, K), means (n, K, d), covs (K, d, d)); component
    covariances are observation-independent for every supported kind.
    """
    if len(indices) == 0:
        raise ValueError("need at least one observation")
    log_w = []
    means = []
    covs = None
    for i in indices:
        mixture = posterior_mixture(task, int(i))
        log_w.append(np.log(mixture.weights))
        means.append(mixture.means)
        if covs is None:
            covs = mixture.covs
    return np.array(log_w), np.array(means), covs


def _diffuse_stacked(
    log_w: np.ndarray, means: np.ndarray, covs: np.ndarray, t: float, s: Schedule
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Push stacked mixture parameters through the forward diffusion to time t."""
    a = schedule_alpha(s, t)
    d = means.shape[-1]
    return log_w, np.sqrt(a) * means, a * covs + (1.0 - a) * np.eye(d)


def _stacked_posterior_params(
    task: Task, indices: np.ndarray, t: float, s: Schedule
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    log_w, means, covs = _stack_base_mixtures(task, indices)
    return _diffuse_stacked(log_w, means, covs, t, s)


def _mixture_scores(
    log_w: np.ndarray, means: np.ndarray, covs: np.ndarray, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Scores and log densities of n mixtures sharing component covariances.

    log_w: (n, K), means: (n, K, d), covs: (K, d, d), theta: (N, d).
    Returns (scores (n, N, d), log_pdf (n, N)).
    """
    n, K = log_w.shape
    N, d = theta.shape
    eye = np.eye(d)
    comp_logpdf = np.empty((K, n, N))
    comp_score = np.empty((K, n, N, d))
    for k in range(K):
        factor = cho_factor(covs[k], lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
        prec = cho_solve(factor, eye)
        prec = 0.5 * (prec + prec.T)
        delta = theta[None, :, :] - means[:, k, None, :]  # (n, N, d)
        sol = delta @ prec
        comp_logpdf[k] = -0.5 * (np.einsum("nad,nad->na", delta, sol) + logdet + d * _LOG_2PI)
        comp_score[k] = -sol
    logits = comp_logpdf + log_w.T[:, :, None]  # (K, n, N)
    log_pdf = logsumexp(logits, axis=0)
    resp = np.exp(logits - log_pdf[None, :, :])
    scores = np.einsum("kna,knad->nad", resp, comp_score)
    return scores, log_pdf


def individual_scores(task: Task, theta: np.ndarray, t: float, s: Schedule) -> np.ndarray:
    """Exact diffused posterior scores for every observation, stacked as (n, ..., d)."""
    theta = _check_theta(task, theta)
    theta2d = np.atleast_2d(theta)
    log_w, means, covs = _stacked_posterior_params(task, np.arange(task.n), t, s)
    scores, _ = _mixture_scores(log_w, means, covs, theta2d)
    if theta.ndim == 1:
        return scores[:, 0, :]
    return scores


def individual_posterior_score(
    task: Task, i: int, theta: np.ndarray, t: float, s: Schedule
) -> np.ndarray:
    """Exact score of the diffused single-observation posterior p_t(theta | x_i)."""
    _check_index(task, i)
    theta = _check_theta(task, theta)
    theta2d = np.atleast_2d(theta)
    log_w, means, covs = _stacked_posterior_params(task, np.array([i]), t, s)
    scores, _ = _mixture_scores(log_w, means, covs, theta2d)
    return scores[0, 0, :] if theta.ndim == 1 else scores[0]


def posterior_log_density(
    task: Task, i: int, theta: np.ndarray, t: float, s: Schedule
) -> np.ndarray:
    """Log density of the diffused single-observation posterior at time t."""
    _check_index(task, i)
    theta = _check_theta(task, theta)
    theta2d = np.atleast_2d(theta)
    log_w, means, covs = _stacked_posterior_params(task, np.array([i]), t, s)
    _, log_pdf = _mixture_scores(log_w, means, covs, theta2d)
    return log_pdf[0, 0] if theta.ndim == 1 else log_pdf[0]
