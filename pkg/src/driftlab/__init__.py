"""driftlab: drift estimation for ensembles of dependent Gaussian-noise copies.

The package simulates N copies X^i = b0 + Z^i of a drifted Gaussian
process on [0, T] under four generative scenarios (correlated log-prices,
fractional random effects, mean-field particles, segmented fractional
Brownian motion), estimates the drift-in-mean b0 by the mean path and its
derivative b0' by a penalized trigonometric projection, and benchmarks
both through seeded, reproducible Monte-Carlo experiments.
"""

from .basis import TrigBasis, complexity_l, complexity_lbar
from .errors import (
    AliasingError,
    GridAlignmentError,
    GridMismatchError,
    InconsistentInitialConditionError,
    NotPositiveSemidefiniteError,
)
from .estimators import (
    CoefficientVector,
    EstimateFn,
    MeanDriftEstimator,
    ProjectionDerivativeEstimator,
    compute_coefficients,
    derivative_estimate,
    estimate_b,
    gbm_drift_estimate,
    ips_backtransform,
    mise,
)
from .grid import (
    PathEnsemble,
    SampledPath,
    TimeGrid,
    cumulative_integral,
    l2_inner,
    l2_norm_sq,
    mean_path,
    riemann_stieltjes,
    rs_by_parts,
)
from .montecarlo import (
    DEFAULT_SEED,
    CalibrationResult,
    ExperimentReport,
    ExperimentSpec,
    ReplicationRecord,
    aggregate,
    calibrate_penalty,
    canned_ips,
    canned_table1,
    canned_table2,
    run_experiment,
    run_replication,
)
from .noise import (
    FbmParams,
    RngStream,
    check_correlation_matrix,
    correlated_bm_ensemble,
    fbm_covariance,
    fbm_grid_covariance,
    matrix_sqrt,
    random_effect_fbm_ensemble,
    sample_fbm_paths,
    toeplitz_corr,
)
from .scenarios import (
    FractionalRandomEffect,
    GbmCorrelated,
    InteractingParticles,
    SegmentedFbm,
    gamma_matrix,
    ips_transform,
    polynomial_drift,
    risk_rate,
    segment_long_path,
    simulate_fractional_copies,
    simulate_gbm_copies,
    simulate_ips,
    simulate_scenario,
    simulate_segmented_copies,
    true_mean_path,
)
from .selection import (
    DEFAULT_PENALTY_CONST,
    AdaptiveDerivativeEstimator,
    SelectionResult,
    adaptive_estimate,
    objective_gamma,
    penalty,
    select_m,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # grid
    "TimeGrid",
    "SampledPath",
    "PathEnsemble",
    "l2_inner",
    "l2_norm_sq",
    "cumulative_integral",
    "riemann_stieltjes",
    "rs_by_parts",
    "mean_path",
    # errors
    "GridMismatchError",
    "GridAlignmentError",
    "NotPositiveSemidefiniteError",
    "AliasingError",
    "InconsistentInitialConditionError",
    # noise
    "RngStream",
    "FbmParams",
    "fbm_covariance",
    "fbm_grid_covariance",
    "sample_fbm_paths",
    "matrix_sqrt",
    "check_correlation_matrix",
    "toeplitz_corr",
    "correlated_bm_ensemble",
    "random_effect_fbm_ensemble",
    # basis
    "TrigBasis",
    "complexity_l",
    "complexity_lbar",
    # scenarios
    "GbmCorrelated",
    "FractionalRandomEffect",
    "InteractingParticles",
    "SegmentedFbm",
    "polynomial_drift",
    "simulate_gbm_copies",
    "simulate_fractional_copies",
    "simulate_ips",
    "ips_transform",
    "segment_long_path",
    "simulate_segmented_copies",
    "simulate_scenario",
    "true_mean_path",
    "gamma_matrix",
    "risk_rate",
    # estimators
    "CoefficientVector",
    "EstimateFn",
    "estimate_b",
    "compute_coefficients",
    "derivative_estimate",
    "gbm_drift_estimate",
    "ips_backtransform",
    "mise",
    "MeanDriftEstimator",
    "ProjectionDerivativeEstimator",
    # selection
    "DEFAULT_PENALTY_CONST",
    "SelectionResult",
    "objective_gamma",
    "penalty",
    "select_m",
    "adaptive_estimate",
    "AdaptiveDerivativeEstimator",
    # montecarlo
    "DEFAULT_SEED",
    "ExperimentSpec",
    "ReplicationRecord",
    "ExperimentReport",
    "CalibrationResult",
    "run_replication",
    "run_experiment",
    "aggregate",
    "canned_ips",
    "canned_table1",
    "canned_table2",
    "calibrate_penalty",
]
