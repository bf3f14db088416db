"""Random walks on the group of rational affine maps.

The library works with exact rational arithmetic throughout: step measures
carry Fraction weights, trajectories keep exact group elements, and p-adic
digit expansions are computed by modular inversion rather than floating
point.  On top of that sit Monte Carlo experiment suites for drift laws,
boundary contraction, height growth, and convolution entropy, plus a CLI.
"""

from .errors import (
    AffwalkError,
    BudgetError,
    ConfigError,
    DegenerateMeasureError,
    PrecisionError,
    StabilizationError,
)
from .exact import (
    INFINITE_PLACE,
    INFINITE_VALUATION,
    format_place,
    format_rational,
    height,
    height_plus,
    is_prime,
    log_norm,
    log_norm_plus,
    parse_place,
    parse_rational,
    partial_height_plus,
    prime_factors,
    support_primes,
    valuation,
)
from .group import (
    BOUNDARY_TOL,
    H_IDENTITY,
    IDENTITY,
    AffineMap,
    HPoint,
    act,
    adelic_length,
    compose,
    embed,
    format_affine,
    gauge_count_bound,
    gauge_enumerate,
    gauge_member,
    h_compose,
    h_inverse,
    inverse,
    parse_affine,
)
from .measure import (
    DEFAULT_CELL_BUDGET,
    ConvolutionTable,
    DriftProfile,
    MeasureReport,
    StepDistribution,
    contracting_set,
    convolve,
    drift,
    drift_profile,
    entropy,
    first_moment,
    measure_config,
    parse_measure_config,
    power,
    q_approximant,
    reflect,
    table_of,
    validate,
)
from .padic import PadicExpansion, ball_key, ball_key_exact, expand, padic_log_distance
from .prng import SplitMix64, mix64, replica_seed
from .walk import (
    BoundaryDigits,
    BoundarySample,
    DivergenceReport,
    EmpiricalMeasure,
    RealLimit,
    Trajectory,
    boundary_digits,
    divergence_statistic,
    empirical_measure,
    extract_boundary,
    increment_valuation_rate,
    real_limit,
    sample_path,
    tail_point,
)

__version__ = "0.1.0"

__all__ = [
    "AffwalkError",
    "BudgetError",
    "ConfigError",
    "DegenerateMeasureError",
    "PrecisionError",
    "StabilizationError",
    "INFINITE_PLACE",
    "INFINITE_VALUATION",
    "valuation",
    "log_norm",
    "log_norm_plus",
    "height",
    "height_plus",
    "partial_height_plus",
    "is_prime",
    "prime_factors",
    "support_primes",
    "format_rational",
    "parse_rational",
    "format_place",
    "parse_place",
    "PadicExpansion",
    "expand",
    "padic_log_distance",
    "ball_key",
    "ball_key_exact",
    "AffineMap",
    "IDENTITY",
    "HPoint",
    "H_IDENTITY",
    "BOUNDARY_TOL",
    "compose",
    "inverse",
    "act",
    "embed",
    "h_compose",
    "h_inverse",
    "adelic_length",
    "gauge_member",
    "gauge_enumerate",
    "gauge_count_bound",
    "format_affine",
    "parse_affine",
    "StepDistribution",
    "MeasureReport",
    "DriftProfile",
    "ConvolutionTable",
    "DEFAULT_CELL_BUDGET",
    "validate",
    "drift",
    "drift_profile",
    "contracting_set",
    "first_moment",
    "q_approximant",
    "reflect",
    "table_of",
    "convolve",
    "power",
    "entropy",
    "measure_config",
    "parse_measure_config",
    "SplitMix64",
    "mix64",
    "replica_seed",
    "Trajectory",
    "BoundarySample",
    "BoundaryDigits",
    "RealLimit",
    "EmpiricalMeasure",
    "DivergenceReport",
    "sample_path",
    "extract_boundary",
    "boundary_digits",
    "real_limit",
    "empirical_measure",
    "divergence_statistic",
    "increment_valuation_rate",
    "tail_point",
    "__version__",
]
