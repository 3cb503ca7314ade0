"""Goodness-of-fit tests for the Lévy distribution with unknown scale."""

from .dist import (
    Alternative,
    RngStream,
    alt_sample,
    alt_theta_score,
    levy_cdf,
    levy_pdf,
    levy_quantile,
    levy_sample,
    parse_alternative,
)
from .errors import (
    DegenerateStatisticError,
    DomainError,
    EstimationError,
    LevyGofError,
    QuadratureError,
    UnsupportedFamilyError,
)
from .estimate import EstimatorKind, estimate_lambda
from .stats import (
    StatisticSpec,
    StatisticValue,
    evaluate,
    evaluate_many,
    quantile_cond_variance,
    stat_edf,
    stat_Ibar,
    stat_J,
    stat_N1,
    stat_R,
    stat_R_standardized,
)

__version__ = "0.1.0"
