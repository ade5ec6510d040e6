"""Brown-Resnick max-stable process simulation on one-dimensional grids.

Five distributionally equivalent generators, closed-form approximation
error bounds, and the statistics used to verify Gumbel margins,
max-stability and stationarity of the simulated fields.
"""

from .bounds import ErrorBudget, block_bound, excursion_bound, method_error_bound
from .gauss import (
    CovarianceFactor,
    Grid,
    VariogramModel,
    build_covariance,
    sample_drifted_path,
)
from .methods import (
    FieldRealization,
    MethodConfig,
    method0,
    method1,
    method2,
    method3,
    method4,
    simulate,
)
from .ppp import GumbelPointStream, MarkedGumbelStream, MarkedPoint
from .rng import RandomStream
from .shape import (
    LambdaEstimate,
    PooledShapeSource,
    RejectionShapeSource,
    ShapeFunction,
    ShapeSource,
    estimate_lambda_p,
    sample_shape,
)
from .stats import (
    DevSummary,
    dev_summary,
    gumbel_cdf,
    ks_distance_to_gumbel,
    ks_two_sample,
    ks_two_sample_critical,
    max_stability_check,
    poisson_counts_pvalue,
    stationarity_check,
)

__version__ = "0.1.0"

__all__ = [
    "CovarianceFactor",
    "DevSummary",
    "ErrorBudget",
    "FieldRealization",
    "Grid",
    "GumbelPointStream",
    "LambdaEstimate",
    "MarkedGumbelStream",
    "MarkedPoint",
    "MethodConfig",
    "PooledShapeSource",
    "RandomStream",
    "RejectionShapeSource",
    "ShapeFunction",
    "ShapeSource",
    "VariogramModel",
    "block_bound",
    "build_covariance",
    "dev_summary",
    "estimate_lambda_p",
    "excursion_bound",
    "gumbel_cdf",
    "ks_distance_to_gumbel",
    "ks_two_sample",
    "ks_two_sample_critical",
    "max_stability_check",
    "method0",
    "method1",
    "method2",
    "method3",
    "method4",
    "method_error_bound",
    "poisson_counts_pvalue",
    "sample_drifted_path",
    "sample_shape",
    "simulate",
    "stationarity_check",
]
