"""Estimation of extremal dependence through tail moment ratios.

The package estimates the extremal coefficient of a heavy-tailed random
vector — the effective number of asymptotically independent components among
a chosen index set — together with exact population counterparts for
discrete spectral measures, weight optimization on the simplex, a max-linear
simulation model, and a Monte Carlo harness comparing the estimators.
"""

from .core import (
    DataMatrix,
    DegenerateDirection,
    EpsOutOfRange,
    EstimateReport,
    EstimationError,
    IndexSet,
    KOutOfRange,
    NegativeWeight,
    NoExceedances,
    NonPositiveAlpha,
    NonPositiveScale,
    NonSymmetric,
    NotStandardized,
    ParamOutOfRange,
    Perturbation,
    QuadraticForm,
    StandardizedMatrix,
    SupportViolation,
    WeightVector,
    ZeroSum,
    basis_weights,
    make_weight_vector,
    partial_max,
    uniform_weights,
)
from .estimators import (
    benchmark_ratio_known,
    exceedance_fraction,
    moment_mean,
    moment_ratio_known,
    moment_ratio_ranks,
    rank_angular_parts,
    stable_tail_estimate,
)
from .harness import (
    ESTIMATOR_NAMES,
    ExperimentConfig,
    ExperimentReport,
    MethodSummary,
    run_experiment,
    table_experiments,
    variance_grid,
)
from .io import read_matrix_csv, write_matrix_csv
from .margins import (
    hill_inverse_alpha,
    scaled_by_order_statistics,
    standardize_known,
    upper_order_statistics,
)
from .maxlinear import (
    MaxLinearModel,
    derive_seed,
    frechet_sample,
    make_scenario,
    model_spectral_measure,
    simulate,
    uniform_open,
)
from .oracle import (
    AsymptoticVariances,
    DiscreteSpectralMeasure,
    MomentDerivatives,
    asymptotic_variances,
    extremal_coefficient,
    mean_intensity,
    moment_derivatives,
    negative_entropy_vector,
    optimal_weights,
    pair_product_moment,
    perturbed_moment,
    rank_asymptotic_variance,
    rank_variance_matrix,
    ratio_covariance,
    renormalized_measure,
    spectral_moment,
    spectral_second_moment,
)
from .weights import (
    minimize_quadratic_on_simplex,
    optimal_weights_known,
    power_quotient,
    rank_variance_form,
    scale_quotient,
    second_moment_matrix_known,
    second_moment_matrix_ranks,
    stable_tail_variance,
    tau_moment_known,
    tau_moment_ranks,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticVariances",
    "DataMatrix",
    "DegenerateDirection",
    "DiscreteSpectralMeasure",
    "ESTIMATOR_NAMES",
    "EpsOutOfRange",
    "EstimateReport",
    "EstimationError",
    "ExperimentConfig",
    "ExperimentReport",
    "IndexSet",
    "KOutOfRange",
    "MaxLinearModel",
    "MethodSummary",
    "MomentDerivatives",
    "NegativeWeight",
    "NoExceedances",
    "NonPositiveAlpha",
    "NonPositiveScale",
    "NonSymmetric",
    "NotStandardized",
    "ParamOutOfRange",
    "Perturbation",
    "QuadraticForm",
    "StandardizedMatrix",
    "SupportViolation",
    "WeightVector",
    "ZeroSum",
    "asymptotic_variances",
    "basis_weights",
    "benchmark_ratio_known",
    "derive_seed",
    "exceedance_fraction",
    "extremal_coefficient",
    "frechet_sample",
    "hill_inverse_alpha",
    "make_scenario",
    "make_weight_vector",
    "mean_intensity",
    "minimize_quadratic_on_simplex",
    "model_spectral_measure",
    "moment_derivatives",
    "moment_mean",
    "moment_ratio_known",
    "moment_ratio_ranks",
    "negative_entropy_vector",
    "optimal_weights",
    "optimal_weights_known",
    "pair_product_moment",
    "partial_max",
    "perturbed_moment",
    "power_quotient",
    "rank_angular_parts",
    "rank_asymptotic_variance",
    "rank_variance_form",
    "rank_variance_matrix",
    "ratio_covariance",
    "read_matrix_csv",
    "renormalized_measure",
    "run_experiment",
    "scale_quotient",
    "scaled_by_order_statistics",
    "second_moment_matrix_known",
    "second_moment_matrix_ranks",
    "simulate",
    "spectral_moment",
    "spectral_second_moment",
    "stable_tail_estimate",
    "stable_tail_variance",
    "standardize_known",
    "table_experiments",
    "tau_moment_known",
    "tau_moment_ranks",
    "uniform_open",
    "uniform_weights",
    "upper_order_statistics",
    "variance_grid",
    "write_matrix_csv",
]
