"""
Conway-Maxwell-Poisson distributions in canonical and mean parametrization.

This package provides:
- core: canonical (eta, nu) evaluation with certified truncation
- solver: bracketed solution of the mean constraint for eta
- grid: precomputed eta over (log mu, nu) with bilinear interpolation
- mean_cmp: the mean-parametrized distribution, sampling and large-nu limits
"""

from .core import (
    CmpParams,
    PmfTable,
    log_normalizer,
    log_pmf,
    mode,
    moments,
    pmf_table,
    successive_log_ratio,
    truncation_window,
)
from .grid import (
    GridDocument,
    LambdaGrid,
    build_grid,
    build_grid_from_means,
    interpolate_eta,
    load_grid,
    save_grid,
)
from .mean_cmp import (
    LimitPmf,
    MeanCMP,
    SampleStream,
    cdf,
    convergence_diagnostic,
    limit_pmf,
    pmf,
    quantile,
    sample,
)
from .solver import (
    BracketRule,
    BracketStrategy,
    EtaBracket,
    MeanParams,
    SolveResult,
    bracket,
    lemma_bracket,
    mean_residual,
    naive_bracket,
    solve,
    solve_eta,
)

__all__ = [
    # Canonical parametrization
    "CmpParams",
    "PmfTable",
    "log_normalizer",
    "log_pmf",
    "mode",
    "moments",
    "pmf_table",
    "successive_log_ratio",
    "truncation_window",

    # Mean constraint
    "BracketRule",
    "BracketStrategy",
    "EtaBracket",
    "MeanParams",
    "SolveResult",
    "bracket",
    "lemma_bracket",
    "mean_residual",
    "naive_bracket",
    "solve",
    "solve_eta",

    # Grids
    "GridDocument",
    "LambdaGrid",
    "build_grid",
    "build_grid_from_means",
    "interpolate_eta",
    "load_grid",
    "save_grid",

    # Mean-parametrized distribution
    "LimitPmf",
    "MeanCMP",
    "SampleStream",
    "cdf",
    "convergence_diagnostic",
    "limit_pmf",
    "pmf",
    "quantile",
    "sample",
]
