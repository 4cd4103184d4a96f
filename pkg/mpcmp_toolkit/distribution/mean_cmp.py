"""
Mean-parametrized CMP distributions.

A MeanCMP is keyed by (mu, nu): the rate is solved once, the pmf table and
its cumulative sums are cached, and every query reads from them. As nu grows
the distribution concentrates on floor(mu) and ceil(mu) with masses given
by the fractional part of mu; limit_pmf and convergence_diagnostic expose
that limit.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np

from mpcmp_toolkit.config import DEFAULT_SOLVE_TOL, DEFAULT_TAIL_TOL, SolverSettings
from mpcmp_toolkit.errors import DomainError

from .core import CmpParams, PmfTable, pmf_table
from .solver import MeanParams, solve

_MAX_SEED = 2**64 - 1


def _check_count(y: int) -> int:
    if isinstance(y, bool) or not isinstance(y, (int, np.integer)) or y < 0:
        raise DomainError(f"y must be a non-negative integer, got {y!r}")
    return int(y)


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= _MAX_SEED:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


@dataclass(frozen=True)
class MeanCMP:
    """
    CMP distribution with mean mu and dispersion nu.

    Immutable and safe to share; build through from_mean to reuse the
    cached solve and table.
    """

    mp: MeanParams
    eta: float
    table: PmfTable = field(repr=False)
    cdf_array: np.ndarray = field(repr=False)

    @classmethod
    def from_mean(
        cls,
        mu: float,
        nu: float,
        tol: float = DEFAULT_SOLVE_TOL,
        tail_tol: float = DEFAULT_TAIL_TOL,
    ) -> "MeanCMP":
        mp = MeanParams(mu, nu)
        return _distribution(mp.mu, mp.nu, float(tol), float(tail_tol))

    @property
    def y_hi(self) -> int:
        return self.table.y_hi

    def log_pmf(self, y: int) -> float:
        return self.table.log_prob(_check_count(y))

    def pmf(self, y: int) -> float:
        return math.exp(self.log_pmf(y))

    def cdf(self, y: int) -> float:
        y = _check_count(y)
        if y >= self.y_hi:
            return 1.0
        return float(self.cdf_array[y])

    def quantile(self, p: float) -> int:
        """Smallest y with cdf(y) >= p; p = 0 gives the first y with positive mass."""
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {p!r}")
        if p == 0.0:
            return int(np.flatnonzero(self.table.probs > 0.0)[0])
        idx = int(np.searchsorted(self.cdf_array, p, side="left"))
        return min(idx, self.y_hi)

    def moments(self) -> Tuple[float, float]:
        return self.table.moments()

    def stream(self, seed: int) -> "SampleStream":
        return SampleStream(self, seed)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.stream(seed).draw(n)


@lru_cache(maxsize=256)
def _distribution(mu: float, nu: float, tol: float, tail_tol: float) -> MeanCMP:
    mp = MeanParams(mu, nu)
    result = solve(mp, SolverSettings(tol=tol, tail_tol=tail_tol))
    table = pmf_table(CmpParams(result.eta, nu), tail_tol)
    cdf = table.cdf_values()
    cdf.flags.writeable = False
    return MeanCMP(mp=mp, eta=result.eta, table=table, cdf_array=cdf)


class SampleStream:
    """
    Seeded inverse-cdf sampler over a MeanCMP table.

    Holds mutable generator state (numpy PCG64); confine each stream to one
    thread and use distinct seeds for parallel generation.
    """

    def __init__(self, distribution: MeanCMP, seed: int):
        self.distribution = distribution
        self.seed = _check_seed(seed)
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def params(self) -> MeanParams:
        return self.distribution.mp

    @property
    def table(self) -> PmfTable:
        return self.distribution.table

    def draw(self, n: int) -> np.ndarray:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise DomainError(f"n must be a positive integer, got {n!r}")
        u = self._rng.random(int(n))
        idx = np.searchsorted(self.distribution.cdf_array, u, side="right")
        return np.minimum(idx, self.distribution.y_hi).astype(np.int64)


def _get(mp: MeanParams, tol: float, tail_tol: float) -> MeanCMP:
    return _distribution(mp.mu, mp.nu, float(tol), float(tail_tol))


def pmf(y: int, mp: MeanParams, tol: float = DEFAULT_SOLVE_TOL, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """P(Y = y) under the CMP with mean mp.mu and dispersion mp.nu."""
    return _get(mp, tol, tail_tol).pmf(y)


def cdf(y: int, mp: MeanParams, tol: float = DEFAULT_SOLVE_TOL, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    return _get(mp, tol, tail_tol).cdf(y)


def quantile(p: float, mp: MeanParams, tol: float = DEFAULT_SOLVE_TOL, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    return _get(mp, tol, tail_tol).quantile(p)


def sample(
    n: int,
    mp: MeanParams,
    seed: int,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> np.ndarray:
    """n inverse-cdf draws; identical (n, mp, seed) gives identical output."""
    return _get(mp, tol, tail_tol).sample(n, seed)


@dataclass(frozen=True)
class LimitPmf:
    """Limit of the CMP with mean mu as nu grows without bound."""

    lower_value: int
    upper_value: int
    lower_prob: float
    upper_prob: float
    degenerate: bool

    def mass(self, y: int) -> float:
        if self.degenerate:
            return 1.0 if y == self.lower_value else 0.0
        if y == self.lower_value:
            return self.lower_prob
        if y == self.upper_value:
            return self.upper_prob
        return 0.0

    def as_dict(self) -> Dict[int, float]:
        if self.degenerate:
            return {self.lower_value: 1.0}
        return {self.lower_value: self.lower_prob, self.upper_value: self.upper_prob}


def limit_pmf(mu: float) -> LimitPmf:
    """Point mass at an integer mu; otherwise masses (1 - D, D) on floor(mu), ceil(mu)."""
    mu_f = float(mu)
    if not math.isfinite(mu_f) or mu_f < 0.0:
        raise DomainError(f"mu must be finite and non-negative, got {mu!r}")

    lower = math.floor(mu_f)
    delta = mu_f - lower
    if delta == 0.0:
        return LimitPmf(lower, lower, 1.0, 0.0, degenerate=True)
    return LimitPmf(lower, lower + 1, 1.0 - delta, delta, degenerate=False)


def convergence_diagnostic(
    mu: float,
    nu: float,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
    distribution: Optional[MeanCMP] = None,
) -> float:
    """
    Total-variation distance between the CMP(mu, nu) pmf and its large-nu limit.

    A precomputed distribution may be passed to skip the solve; it must
    have exactly the requested (mu, nu).
    """
    if distribution is not None and distribution.mp != MeanParams(mu, nu):
        raise DomainError(
            f"distribution has (mu={distribution.mp.mu!r}, nu={distribution.mp.nu!r}), requested (mu={mu!r}, nu={nu!r})",
            details={"mu": mu, "nu": nu},
        )
    dist = distribution or MeanCMP.from_mean(mu, nu, tol, tail_tol)
    limit = limit_pmf(dist.mp.mu)

    top = max(dist.y_hi, limit.upper_value)
    ys = np.arange(top + 1)
    probs = np.zeros(top + 1)
    probs[: dist.y_hi + 1] = dist.table.probs
    for y in range(dist.y_hi + 1, top + 1):
        probs[y] = dist.pmf(y)
    limits = np.array([limit.mass(int(y)) for y in ys])

    tv = 0.5 * float(np.abs(probs - limits).sum())
    return min(max(tv, 0.0), 1.0)
