"""Linkage-rate estimation for partially observed grouped networks.

Estimates the probability that a node in one group links to at least one
node in another group when only a random subset of nodes is observed.
Provides the naive observed rate, a subsample-based correction for the
missed-edge bias, projection-based standard errors, network generators
for validation studies, and a CLI (``linkrate``).
"""
from .degree_laws import BlockLaws, DegreeLaw
from .errors import (
    CombinatorialGuardError,
    ConfigError,
    GenerationError,
    InputError,
    LinkrateError,
    NumericalError,
)
from .estimator import LinkageRateEstimator
from .estimators import (
    LinkageKernel,
    correction_factor,
    correction_limit,
    linkage_kernel,
    unadjusted_rate,
)
from .experiments import (
    DiagnosticConfig,
    DiagnosticResult,
    DiagnosticRow,
    PairSummary,
    SimulationConfig,
    SimulationResult,
    measure_linkage_matrix,
    run_diagnostic,
    run_simulation,
)
from .generate import (
    BlockStats,
    GenerationStats,
    generate_network,
    generate_scale_free,
)
from .graph import GroupedNetwork, NodeSubset
from .reports import PairEstimate, estimate_all_pairs, estimate_pair
from .sampling import (
    ENUMERATION_GUARD,
    SampleIndex,
    draw_sample,
    draw_subsample_pairs,
    enumerate_subsample_pairs,
    pair_space_size,
    subsample_size,
)
from .variance import (
    DeltaVariance,
    ProjectionRecord,
    delta_variance,
    kernel_covariance,
    node_projections,
    normal_interval,
    normal_quantile,
    pair_unit_count,
    unadjusted_se,
)

__version__ = "0.1.0"

__all__ = [
    "BlockLaws",
    "BlockStats",
    "CombinatorialGuardError",
    "ConfigError",
    "DegreeLaw",
    "DeltaVariance",
    "DiagnosticConfig",
    "DiagnosticResult",
    "DiagnosticRow",
    "ENUMERATION_GUARD",
    "GenerationError",
    "GenerationStats",
    "GroupedNetwork",
    "InputError",
    "LinkageKernel",
    "LinkageRateEstimator",
    "LinkrateError",
    "NodeSubset",
    "NumericalError",
    "PairEstimate",
    "PairSummary",
    "ProjectionRecord",
    "SampleIndex",
    "SimulationConfig",
    "SimulationResult",
    "correction_factor",
    "correction_limit",
    "delta_variance",
    "draw_sample",
    "draw_subsample_pairs",
    "enumerate_subsample_pairs",
    "estimate_all_pairs",
    "estimate_pair",
    "generate_network",
    "generate_scale_free",
    "kernel_covariance",
    "linkage_kernel",
    "measure_linkage_matrix",
    "node_projections",
    "normal_interval",
    "normal_quantile",
    "pair_space_size",
    "pair_unit_count",
    "run_diagnostic",
    "run_simulation",
    "subsample_size",
    "unadjusted_rate",
    "unadjusted_se",
    "__version__",
]
