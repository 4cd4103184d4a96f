"""
Discrete associated-kernel smoothing of count data.

The kernel at target x is the CMP pmf with mean x and dispersion nu = 1/h.
Its mean is pinned at x for every bandwidth and its variance vanishes as
h -> 0, so the estimator collapses onto the empirical pmf in that limit.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from mpcmp_toolkit.config import DEFAULT_SOLVE_TOL, DEFAULT_TAIL_TOL
from mpcmp_toolkit.distribution import MeanCMP
from mpcmp_toolkit.errors import DomainError

from .fitting import CountData


@dataclass(frozen=True)
class Bandwidth:
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not math.isfinite(h) or h <= 0.0:
            raise DomainError(f"bandwidth must be positive and finite, got {self.h!r}", stage="smooth")
        object.__setattr__(self, "h", h)

    @property
    def nu_of_h(self) -> float:
        return 1.0 / self.h


@dataclass(frozen=True)
class SmoothedPmf:
    """Kernel estimate over the support 0..y_max."""

    estimates: np.ndarray = field(repr=False)
    renormalized: bool
    raw_total_mass: float
    bandwidth: Bandwidth

    def __post_init__(self):
        self.estimates.flags.writeable = False

    @property
    def y_max(self) -> int:
        return self.estimates.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.estimates.size)

    def as_dict(self) -> Dict[int, float]:
        return {int(y): float(p) for y, p in zip(self.support, self.estimates)}

    def total_variation(self, other: Union["SmoothedPmf", Mapping[int, float]]) -> float:
        """Half the L1 distance to another pmf over the union of supports."""
        theirs = other.as_dict() if isinstance(other, SmoothedPmf) else dict(other)
        mine = self.as_dict()
        keys = set(mine) | set(theirs)
        return 0.5 * sum(abs(mine.get(y, 0.0) - theirs.get(y, 0.0)) for y in keys)


def empirical_pmf(data: CountData) -> Dict[int, float]:
    return {y: count / data.n for y, count in data.frequencies().items()}


def kernel_weight(
    x: int,
    y: int,
    bw: Bandwidth,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """K_{x,h}(y): the CMP pmf at y with mean x and nu = 1/h."""
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or x < 0:
        raise DomainError(f"kernel target must be a non-negative integer, got {x!r}", stage="smooth")
    return MeanCMP.from_mean(float(x), bw.nu_of_h, tol, tail_tol).pmf(y)


def _kernel_matrix(
    targets: Sequence[int],
    points: Sequence[int],
    bw: Bandwidth,
    tol: float,
    tail_tol: float,
    max_workers: Optional[int] = None,
) -> np.ndarray:
    """Rows are targets x, columns are data points y."""

    def row(x: int) -> np.ndarray:
        dist = MeanCMP.from_mean(float(x), bw.nu_of_h, tol, tail_tol)
        return np.array([dist.pmf(int(y)) for y in points])

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(row, targets))
    else:
        rows = [row(x) for x in targets]
    return np.vstack(rows)


def _resolve_y_max(data: CountData, y_max: Optional[int]) -> int:
    top = int(data.values.max())
    if y_max is None:
        return top
    if y_max < top:
        raise DomainError(f"y_max={y_max} is below the largest observation {top}", stage="smooth")
    return int(y_max)


def smooth(
    data: CountData,
    bw: Bandwidth,
    y_max: Optional[int] = None,
    renormalize: bool = False,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_workers: Optional[int] = None,
) -> SmoothedPmf:
    """
    Kernel estimate f(x) = (1/n) sum_i K_{x,h}(y_i) for x = 0..y_max.

    Raw estimates need not sum to one; renormalize divides by their total.
    """
    top = _resolve_y_max(data, y_max)
    freqs = data.frequencies()
    points = list(freqs)
    weights = np.array([freqs[y] for y in points], dtype=float) / data.n

    matrix = _kernel_matrix(range(top + 1), points, bw, tol, tail_tol, max_workers)
    estimates = np.clip(matrix @ weights, 0.0, None)
    raw_total = float(estimates.sum())

    if renormalize:
        if raw_total <= 0.0:
            raise DomainError("estimate has zero total mass; cannot renormalize", stage="smooth")
        estimates = estimates / raw_total

    logger.debug(f"smoothed n={data.n} with h={bw.h:g}: raw mass {raw_total:.12g}")
    return SmoothedPmf(estimates=estimates, renormalized=renormalize, raw_total_mass=raw_total, bandwidth=bw)


def second_order_check(
    x: int,
    bw: Bandwidth,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> Tuple[float, float]:
    """(|E K_{x,h} - x|, Var K_{x,h}) for the kernel at target x."""
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or x < 0:
        raise DomainError(f"kernel target must be a non-negative integer, got {x!r}", stage="smooth")
    mean, variance = MeanCMP.from_mean(float(x), bw.nu_of_h, tol, tail_tol).moments()
    return abs(mean - x), variance


def cv_score(
    data: CountData,
    bw: Bandwidth,
    y_max: Optional[int] = None,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """
    Least-squares cross-validation score sum_x f(x)^2 - (2/n) sum_i f_{-i}(y_i).

    The leave-one-out estimate at y_i drops y_i's own kernel contribution
    and averages over the remaining n - 1 observations.
    """
    if data.n < 2:
        raise DomainError("cross-validation needs at least two observations", stage="smooth")
    top = _resolve_y_max(data, y_max)
    freqs = data.frequencies()
    points = list(freqs)
    counts = np.array([freqs[y] for y in points], dtype=float)
    n = float(data.n)

    matrix = _kernel_matrix(range(top + 1), points, bw, tol, tail_tol)
    estimates = matrix @ counts / n

    at_points = matrix[points, :]
    loo = (at_points @ counts - np.diag(at_points)) / (n - 1.0)
    return float(np.square(estimates).sum() - 2.0 / n * (counts @ loo))


def cv_bandwidth(
    data: CountData,
    h_grid: Sequence[float],
    y_max: Optional[int] = None,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> Bandwidth:
    """Grid member with the smallest LSCV score; ties go to the smaller h."""
    candidates = sorted({Bandwidth(h).h for h in h_grid})
    if not candidates:
        raise DomainError("bandwidth grid is empty", stage="smooth")
    if len(candidates) == 1:
        return Bandwidth(candidates[0])

    best: Optional[Bandwidth] = None
    best_score = math.inf
    for h in candidates:
        bw = Bandwidth(h)
        score = cv_score(data, bw, y_max, tol, tail_tol)
        logger.debug(f"LSCV h={h:g}: {score:.12g}")
        if best is None or score < best_score:
            best, best_score = bw, score

    assert best is not None
    logger.info(f"selected bandwidth h={best.h:g} (LSCV {best_score:.6g})")
    return best
