"""
mpcmp-toolkit: mean-parametrized Conway-Maxwell-Poisson distributions
"""

__version__ = "0.1.0"

from .distribution import (
    CmpParams,
    LambdaGrid,
    LimitPmf,
    MeanCMP,
    MeanParams,
    SampleStream,
    build_grid,
    cdf,
    convergence_diagnostic,
    interpolate_eta,
    limit_pmf,
    pmf,
    quantile,
    sample,
    solve,
    solve_eta,
)
from .errors import (
    CmpError,
    ConvergenceError,
    DataParseError,
    DivergentSeriesError,
    DomainError,
    GridFormatError,
    OutOfRangeError,
)
from .logging import EventLogger

__all__ = [
    # Distributions
    'CmpParams',
    'MeanParams',
    'MeanCMP',
    'SampleStream',
    'LimitPmf',
    'pmf',
    'cdf',
    'quantile',
    'sample',
    'limit_pmf',
    'convergence_diagnostic',

    # Mean constraint
    'solve',
    'solve_eta',
    'LambdaGrid',
    'build_grid',
    'interpolate_eta',

    # Errors
    'CmpError',
    'DomainError',
    'DivergentSeriesError',
    'OutOfRangeError',
    'ConvergenceError',
    'GridFormatError',
    'DataParseError',

    # Logging
    'EventLogger',
]
