"""
Canonical Conway-Maxwell-Poisson evaluation.

The distribution P(Y = y) = lambda^y / ((y!)^nu Z(lambda, nu)) is handled
exclusively through eta = log(lambda). Terms are accumulated relative to
the mode using the successive log-ratio eta - nu*log(y), which keeps the
ratio identity exact to rounding even when lambda itself would overflow
any float (nu in the thousands).
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import special

from mpcmp_toolkit.config import DEFAULT_MAX_WINDOW, DEFAULT_TAIL_TOL, DEFAULT_WORK_DECADES
from mpcmp_toolkit.errors import ConvergenceError, DivergentSeriesError, DomainError
from mpcmp_toolkit.numerics import NEG_INF

_EPS = np.finfo(float).eps
_WORK_NATS = DEFAULT_WORK_DECADES * math.log(10.0)


@dataclass(frozen=True)
class CmpParams:
    """Canonical parameters (eta = log lambda, nu) of a CMP distribution."""

    eta: float
    nu: float

    def __post_init__(self):
        eta = float(self.eta)
        nu = float(self.nu)
        if math.isnan(eta) or eta == math.inf:
            raise DomainError(f"eta must be real or -inf, got {self.eta!r}")
        if not math.isfinite(nu) or nu < 0.0:
            raise DomainError(f"nu must be finite and non-negative, got {self.nu!r}")
        if nu == 0.0 and eta >= 0.0:
            raise DivergentSeriesError(
                f"normalizing series diverges for nu = 0 and eta = {eta} >= 0",
                details={"eta": eta, "nu": nu},
            )
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def from_rate(cls, rate: float, nu: float) -> "CmpParams":
        """Build parameters from a linear-scale rate lambda >= 0."""
        if rate < 0 or math.isnan(rate):
            raise DomainError(f"rate must be non-negative, got {rate!r}")
        return cls(eta=math.log(rate) if rate > 0 else NEG_INF, nu=nu)


@dataclass(frozen=True)
class PmfTable:
    """
    Normalized log-probabilities over the certified window 0..y_hi.

    tail_bound is an upper bound on the probability mass beyond y_hi
    relative to the in-window mass.
    """

    params: CmpParams
    y_hi: int
    log_probs: np.ndarray = field(repr=False)
    log_normalizer: float
    tail_bound: float
    y_lo: int = 0

    def __post_init__(self):
        self.log_probs.flags.writeable = False

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.y_lo, self.y_hi + 1)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def cdf_values(self) -> np.ndarray:
        """Cumulative probabilities over the window; the last entry is exactly 1."""
        cdf = np.minimum(np.cumsum(self.probs), 1.0)
        cdf[-1] = 1.0
        return cdf

    def log_prob(self, y: int) -> float:
        """Log-probability of y; values past the window use the closed form."""
        if y < 0:
            return NEG_INF
        if y <= self.y_hi:
            return float(self.log_probs[y])
        eta, nu = self.params.eta, self.params.nu
        if eta == NEG_INF:
            return NEG_INF
        return y * eta - nu * float(special.gammaln(y + 1)) - self.log_normalizer

    def moments(self) -> Tuple[float, float]:
        """Mean and centered variance over the window, in one pass."""
        probs = self.probs
        support = self.support.astype(float)
        mean = float(probs @ support)
        variance = float(probs @ np.square(support - mean))
        return mean, max(variance, 0.0)


def _check_tail_tol(tail_tol: float) -> float:
    if not 0.0 < tail_tol < 1.0:
        raise DomainError(f"tail_tol must lie in (0, 1), got {tail_tol!r}")
    return float(tail_tol)


def mode(params: CmpParams) -> int:
    """
    Return floor(exp(eta/nu)), the largest maximizer of the pmf.

    Ties y^nu == lambda resolve to the larger y; nu = 0 gives 0.
    """
    if params.nu == 0.0 or params.eta == NEG_INF:
        return 0

    ratio = params.eta / params.nu
    if ratio > math.log(DEFAULT_MAX_WINDOW):
        raise ConvergenceError(
            f"mode exp({ratio:.6g}) exceeds the supported window",
            stage="truncation",
            details={"eta": params.eta, "nu": params.nu},
        )

    m = int(math.floor(math.exp(ratio)))
    slack = 4.0 * _EPS * max(1.0, abs(params.eta))
    while params.nu * math.log(m + 1) <= params.eta + slack:
        m += 1
    while m > 0 and params.nu * math.log(m) > params.eta + slack:
        m -= 1
    return m


def successive_log_ratio(y: int, params: CmpParams) -> float:
    """Return log[P(Y=y-1) / P(Y=y)] = nu*log(y) - eta, without Z."""
    if y < 1:
        raise DomainError(f"successive_log_ratio requires y >= 1, got {y!r}")
    if params.eta == NEG_INF:
        return math.inf
    return params.nu * math.log(y) - params.eta


def _initial_length(m: int, nu: float) -> int:
    spread = math.sqrt((m + 1) / max(nu, 1e-2))
    return m + 2 + int(32 + 12 * spread)


def _relative_log_terms(params: CmpParams, m: int, length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Log-terms for y = 0..length-1 relative to the mode term, plus increments."""
    k = np.arange(1, length, dtype=float)
    increments = params.eta - params.nu * np.log(k)

    rel = np.empty(length)
    rel[m] = 0.0
    if length - 1 > m:
        rel[m + 1 :] = np.cumsum(increments[m:])
    if m > 0:
        rel[:m] = -np.cumsum(increments[m - 1 :: -1])[::-1]
    return rel, increments


def _certified_window(params: CmpParams, tail_tol: float) -> Tuple[np.ndarray, float]:
    """
    Relative log-terms over 0..y_hi and the log of the certified tail bound.

    y_hi is the first y >= mode where the term is more than the work
    threshold below the peak and the geometric tail bound
    term(y) * r / (1 - r), r = exp(eta - nu*log(y+1)) < 1, is below tail_tol.
    """
    if params.eta == NEG_INF:
        return np.zeros(1), NEG_INF

    m = mode(params)
    log_tol = math.log(tail_tol)
    length = _initial_length(m, params.nu)

    while True:
        if length > DEFAULT_MAX_WINDOW:
            raise ConvergenceError(
                f"truncation window exceeded {DEFAULT_MAX_WINDOW} terms",
                stage="truncation",
                details={"eta": params.eta, "nu": params.nu, "mode": m},
            )

        rel, increments = _relative_log_terms(params, m, length)
        log_r = increments[m:]
        candidates = rel[m : length - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_tail = candidates + log_r - np.log1p(-np.exp(log_r))
        ok = (log_r < 0.0) & (candidates < -_WORK_NATS) & (log_tail <= log_tol)

        hits = np.flatnonzero(ok)
        if hits.size:
            y_hi = m + int(hits[0])
            return rel[: y_hi + 1], float(log_tail[hits[0]])
        length *= 2


def truncation_window(params: CmpParams, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Return the certified truncation point y_hi for params."""
    _check_tail_tol(tail_tol)
    rel, _ = _certified_window(params, tail_tol)
    return len(rel) - 1


def pmf_table(params: CmpParams, tail_tol: float = DEFAULT_TAIL_TOL) -> PmfTable:
    """Materialize the normalized pmf over its certified window."""
    _check_tail_tol(tail_tol)
    rel, log_tail = _certified_window(params, tail_tol)

    log_mass = float(special.logsumexp(rel))
    if params.eta == NEG_INF:
        peak = 0.0
    else:
        m = mode(params)
        peak = m * params.eta - params.nu * float(special.gammaln(m + 1))

    return PmfTable(
        params=params,
        y_hi=len(rel) - 1,
        log_probs=rel - log_mass,
        log_normalizer=peak + log_mass,
        tail_bound=math.exp(log_tail - log_mass) if log_tail > NEG_INF else 0.0,
    )


def log_normalizer(params: CmpParams, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Return log Z(lambda, nu)."""
    return pmf_table(params, tail_tol).log_normalizer


def log_pmf(y: int, params: CmpParams, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Return log P(Y = y)."""
    if isinstance(y, bool) or not isinstance(y, (int, np.integer)) or y < 0:
        raise DomainError(f"y must be a non-negative integer, got {y!r}")
    return pmf_table(params, tail_tol).log_prob(int(y))


def moments(params: CmpParams, tail_tol: float = DEFAULT_TAIL_TOL) -> Tuple[float, float]:
    """Return (mean, variance) over the certified window."""
    return pmf_table(params, tail_tol).moments()
