"""Noisy Riemann-Maruyama quadrature and its Monte Carlo error experiments.

The package measures how the left-point quadrature sum behaves when both
the integrand samples and the integrator increments carry analytic
disturbances, across mesh refinement, problem families, and disturbance
classes, with deterministic seed-keyed sampling so every experiment is
reproducible bit for bit at any worker count.
"""

from .errors import (
    AlignmentError,
    ConfigError,
    ContractError,
    DomainError,
    ResourceLimitError,
)
from .experiments import (
    BOOTSTRAP_RESAMPLES,
    DEFAULT_DELTA_SWEEP,
    ErrorReport,
    ExperimentConfig,
    LevelEstimate,
    config_echo,
    config_from_echo,
    fit_slope,
    noise_regime_sweep,
    reports_equal_bits,
    run_parallel,
    strong_error,
    strong_error_exact_x1,
    strong_error_reference,
    weak_error,
)
from .integrands import (
    KINDS,
    Integrand,
    eval_integrand,
    exact_integral_x1,
    make_integrand,
    payoff,
)
from .noise import (
    CATALOGUE,
    EXACT_INFO,
    ClassTag,
    DisturbanceFunction,
    NoiseSpec,
    check_growth_bound,
    custom_disturbance,
    get_disturbance,
    perturb_w,
    perturb_x,
)
from .paths import (
    Mesh,
    TrajectoryBundle,
    evaluate_count,
    sample_poisson_arrivals,
    sample_wiener_fine,
    sample_wiener_with_increments,
    stream_generator,
    subsample,
)
from .quadrature import (
    QuadratureInput,
    compensated_dot,
    neumaier_dot_pair,
    riemann_maruyama,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BOOTSTRAP_RESAMPLES",
    "CATALOGUE",
    "ClassTag",
    "ConfigError",
    "ContractError",
    "DEFAULT_DELTA_SWEEP",
    "DisturbanceFunction",
    "DomainError",
    "ErrorReport",
    "EXACT_INFO",
    "ExperimentConfig",
    "Integrand",
    "KINDS",
    "LevelEstimate",
    "Mesh",
    "NoiseSpec",
    "QuadratureInput",
    "ResourceLimitError",
    "TrajectoryBundle",
    "check_growth_bound",
    "compensated_dot",
    "config_echo",
    "config_from_echo",
    "custom_disturbance",
    "eval_integrand",
    "evaluate_count",
    "exact_integral_x1",
    "fit_slope",
    "get_disturbance",
    "make_integrand",
    "neumaier_dot_pair",
    "noise_regime_sweep",
    "payoff",
    "perturb_w",
    "perturb_x",
    "reports_equal_bits",
    "riemann_maruyama",
    "run_parallel",
    "sample_poisson_arrivals",
    "sample_wiener_fine",
    "sample_wiener_with_increments",
    "stream_generator",
    "strong_error",
    "strong_error_exact_x1",
    "strong_error_reference",
    "subsample",
    "weak_error",
    "__version__",
]
