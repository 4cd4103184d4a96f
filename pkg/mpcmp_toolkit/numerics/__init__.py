"""Special functions and stable log-space primitives."""

from .special import NEG_INF, digamma, log_gamma, log_poisson_weight, log_sum_exp

__all__ = [
    "NEG_INF",
    "digamma",
    "log_gamma",
    "log_poisson_weight",
    "log_sum_exp",
]
