"""Relative-translation invariant Wasserstein distances on discrete data."""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    EmptyCorpus,
    EmptyImage,
    InfeasibleMarginals,
    InvalidExponent,
    InvalidSamplerSpec,
    KernelUnderflow,
    NumericalError,
    ParseError,
    PlacementError,
    RWOTError,
)
from .transport import (
    CostMatrix,
    Coupling,
    DiscreteDistribution,
    SinkhornConfig,
    SolveReport,
    build_cost_matrix,
    exact_solve,
    sinkhorn_solve,
    wasserstein_distance,
)
from .relative import (
    RWReport,
    ShiftResult,
    ShiftSearchConfig,
    optimal_shift,
    rw2_exact,
    rw2_sinkhorn,
    rw_p_distance,
    weighted_mean,
)
from .diagnostics import (
    StabilityReport,
    NormComparison,
    kernel_stability,
    shifted_norm_comparison,
    stability_report,
    support_mean_gap,
)
