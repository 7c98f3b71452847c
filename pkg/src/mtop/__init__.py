"""Anytime m-top arm identification with Boundary Focused Thompson Sampling,
AT-LUCB and a uniform baseline, plus a stochastic vaccine-allocation epidemic
environment to run them on."""

from .algorithms import ALGORITHMS, ATLUCB, BFTS, Uniform, confidence_radius, make_explorer
from .core import (
    ConfigError,
    Environment,
    EnvironmentDescriptor,
    Explorer,
    History,
    InvalidArmError,
    Recommendation,
    Step,
    rank_arms,
    top_m,
)
from .diagnostics import BoundaryReport, DiscretePosterior, check_union_bounds, estimate_boundary_probabilities
from .evaluation import (
    ExperimentRecord,
    GroundTruth,
    aggregate,
    build_ground_truth,
    proportion_correct,
    run_experiment,
    run_single,
    sum_of_means,
)
from .posterior import NotReadyError, TruncatedTPosterior, truncated_t_mean, truncated_t_sample

__version__ = "0.1.0"
