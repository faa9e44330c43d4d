"""Safe and regularized adaptive importance sampling.

An adaptive Monte Carlo engine that rebuilds its proposal each iteration
as a defensive mixture of a weighted kernel density estimate and the
heavy-tailed density it started from. Importance weights are tempered
particle by particle with an exponent in [0, 1], either fixed or adapted
online from the Renyi divergence between each batch's weight profile and
the uniform one.
"""

__version__ = "0.1.0"

from .densities import Density, Gaussian, LogisticPosterior, Mixture, StudentT, toy_target
from .emd import (
    EmdStepReport,
    GridDensity,
    averaged_iterate_kls,
    emd_step,
    kl_divergence,
    rate_regression,
    tv_distance,
    verify_lemma2,
)
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateWeightsError,
    SraisError,
    VerificationError,
)
from .estimators import (
    Estimate,
    classify_accuracy,
    is_estimate,
    posterior_predictive,
    snis_estimate,
    squared_error,
)
from .kernels import (
    GaussianKernel,
    KdeDensity,
    WeightedParticles,
    kde_log_density,
    kde_sample,
    kernel_value,
    subsample,
)
from .rar import rar_eta, rar_eta_from_log, renyi_divergence, renyi_divergence_from_log
from .sampler import (
    IterationRecord,
    ParticleStore,
    SamplerSettings,
    SraisSampler,
    regularize_log_weights,
    regularized_normalized_weights,
    run,
)
from .schedules import (
    AssumptionReport,
    BandwidthPolicy,
    EtaPolicy,
    LambdaPolicy,
    Schedule,
    validate_assumptions,
)

__all__ = [
    "__version__",
    "Density",
    "Gaussian",
    "StudentT",
    "Mixture",
    "LogisticPosterior",
    "toy_target",
    "GridDensity",
    "EmdStepReport",
    "emd_step",
    "tv_distance",
    "kl_divergence",
    "verify_lemma2",
    "averaged_iterate_kls",
    "rate_regression",
    "GaussianKernel",
    "WeightedParticles",
    "KdeDensity",
    "kernel_value",
    "kde_log_density",
    "kde_sample",
    "subsample",
    "renyi_divergence",
    "renyi_divergence_from_log",
    "rar_eta",
    "rar_eta_from_log",
    "Estimate",
    "snis_estimate",
    "is_estimate",
    "squared_error",
    "posterior_predictive",
    "classify_accuracy",
    "LambdaPolicy",
    "BandwidthPolicy",
    "EtaPolicy",
    "Schedule",
    "AssumptionReport",
    "validate_assumptions",
    "SamplerSettings",
    "ParticleStore",
    "SraisSampler",
    "IterationRecord",
    "regularize_log_weights",
    "regularized_normalized_weights",
    "run",
    "SraisError",
    "CapabilityError",
    "DegenerateWeightsError",
    "ConfigError",
    "VerificationError",
]
