"""Annealed Langevin sampling for multi-observation Bayesian posteriors.

Builds composite score fields from per-observation posterior scores, tunes
per-level step sizes and step counts against a Wasserstein accuracy target,
runs the unadjusted Langevin chains over the diffusion levels, and evaluates
the result against exact reference samples.
"""

from __future__ import annotations

from .composite import (
    METHODS,
    CompositeSpec,
    compose_dsm_error,
    composite_field,
    diffuse_covariance,
    geffner_score,
    lambda_matrix,
    linhart_score,
    spec_for_task,
)
from .metrics import W2Report, empirical_w2, sliced_w2
from .sampler import DivergenceError, SampleSet, annealed_sample, ula_chain
from .schedule import LevelGrid, Schedule, alpha, levels, v
from .tasks import (
    KINDS,
    GaussianDist,
    GaussianMixture,
    Task,
    exact_posterior_sample,
    gaussian_task,
    gmm_likelihood_task,
    gmm_prior_task,
    individual_posterior_score,
    individual_scores,
    joint_posterior_mixture,
    posterior_log_density,
    posterior_mixture,
    posterior_moments,
    prior_dist,
    prior_log_density,
    prior_score,
    simulate_observations,
)
from .theory import (
    BridgingConstants,
    bridging_moments,
    compose_gaussians,
    composite_smoothness,
    constant_gap,
    gaussian_constants,
    gaussian_w2,
    propagate_smoothness,
    proxy_bridge,
)
from .tuner import (
    LevelPlan,
    TuningConfig,
    TuningError,
    bias_term,
    choose_step,
    choose_steps,
    gaussian_proxy,
    global_bound,
    plan,
    proxy_compose,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "METHODS",
    "KINDS",
    "Schedule",
    "LevelGrid",
    "alpha",
    "v",
    "levels",
    "Task",
    "GaussianDist",
    "GaussianMixture",
    "gaussian_task",
    "gmm_prior_task",
    "gmm_likelihood_task",
    "prior_dist",
    "simulate_observations",
    "posterior_mixture",
    "posterior_moments",
    "joint_posterior_mixture",
    "exact_posterior_sample",
    "prior_score",
    "prior_log_density",
    "individual_scores",
    "individual_posterior_score",
    "posterior_log_density",
    "CompositeSpec",
    "spec_for_task",
    "diffuse_covariance",
    "lambda_matrix",
    "geffner_score",
    "linhart_score",
    "compose_dsm_error",
    "composite_field",
    "BridgingConstants",
    "bridging_moments",
    "compose_gaussians",
    "proxy_bridge",
    "gaussian_constants",
    "constant_gap",
    "gaussian_w2",
    "propagate_smoothness",
    "composite_smoothness",
    "TuningError",
    "TuningConfig",
    "LevelPlan",
    "choose_step",
    "choose_steps",
    "bias_term",
    "global_bound",
    "gaussian_proxy",
    "proxy_compose",
    "plan",
    "DivergenceError",
    "SampleSet",
    "ula_chain",
    "annealed_sample",
    "W2Report",
    "empirical_w2",
    "sliced_w2",
]
