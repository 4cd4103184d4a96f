"""
Special functions and stable log-space accumulation.

Thin, domain-checked wrappers over scipy.special. Every other module goes
through these so that argument validation and the negative-infinity
convention for log-zero live in one place.
"""

import math
from typing import Iterable, Union

import numpy as np
from scipy import special

from mpcmp_toolkit.errors import DomainError

Real = Union[int, float]

NEG_INF = float("-inf")


def _check_positive(name: str, x: Real) -> float:
    value = float(x)
    if math.isnan(value) or math.isinf(value) or value <= 0.0:
        raise DomainError(f"{name} requires a finite positive argument, got {x!r}")
    return value


def _check_count(name: str, y: int) -> int:
    if isinstance(y, bool) or not isinstance(y, (int, np.integer)) or y < 0:
        raise DomainError(f"{name} requires a non-negative integer, got {y!r}")
    return int(y)


def log_gamma(x: Real) -> float:
    """Return log Gamma(x) for x > 0."""
    return float(special.gammaln(_check_positive("log_gamma", x)))


def digamma(x: Real) -> float:
    """Return psi(x) = Gamma'(x) / Gamma(x) for x > 0."""
    return float(special.digamma(_check_positive("digamma", x)))


def log_sum_exp(terms: Iterable[Real]) -> float:
    """
    Return log(sum(exp(t))) without overflow or underflow.

    Entries may be negative infinity (log of zero). An all-negative-infinity
    input returns negative infinity exactly.

    Raises:
        DomainError: if the sequence is empty or contains NaN or +inf.
    """
    values = np.asarray(list(terms), dtype=float)
    if values.size == 0:
        raise DomainError("log_sum_exp requires at least one term")
    if np.isnan(values).any() or np.isposinf(values).any():
        raise DomainError("log_sum_exp terms must be real or negative infinity")

    peak = values.max()
    if peak == NEG_INF:
        return NEG_INF
    return float(special.logsumexp(values))


def log_poisson_weight(mu: Real, y: int) -> float:
    """Return log(mu**y / y!), the log Poisson weight of count y at rate mu."""
    mu_value = _check_positive("log_poisson_weight", mu)
    count = _check_count("log_poisson_weight", y)
    return count * math.log(mu_value) - float(special.gammaln(count + 1))
