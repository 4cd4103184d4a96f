"""
Maximum-likelihood fitting of the mean-parametrized CMP to count data.

For fixed nu the family is a linear exponential family with mean mu, so
the MLE of mu is the sample mean and the fit reduces to a one-dimensional
profile over log(nu).
"""

import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
from loguru import logger
from scipy import optimize

from mpcmp_toolkit.config import DEFAULT_SOLVE_TOL, DEFAULT_TAIL_TOL, FitSettings
from mpcmp_toolkit.distribution import MeanCMP, MeanParams
from mpcmp_toolkit.errors import DataParseError, DomainError
from mpcmp_toolkit.logging import EventLogger

CMP_PARAMETERS = 2

_COUNT_LINE = re.compile(r"^\d+$")
# log(nu) distance from the upper cap that counts as boundary contact
_BOUNDARY_SLACK = 1e-3


@dataclass(frozen=True)
class CountData:
    """Non-empty sample of non-negative integer counts."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("count data must be a non-empty 1-d sequence")
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(np.isfinite(values)) or np.any(values != np.floor(values)):
                raise DomainError("count data must contain integers only")
        if np.any(values < 0):
            raise DomainError("count data must be non-negative")
        values = values.astype(np.int64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "CountData":
        return cls(np.array(list(values)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def sample_mean(self) -> float:
        return float(self.values.mean())

    @property
    def sample_variance(self) -> float:
        """Unbiased variance; 0 for a single observation."""
        if self.n < 2:
            return 0.0
        return float(self.values.var(ddof=1))

    def frequencies(self) -> Dict[int, int]:
        uniq, counts = np.unique(self.values, return_counts=True)
        return {int(v): int(c) for v, c in zip(uniq, counts)}


def read_counts(path: Union[str, Path]) -> CountData:
    """
    Read one non-negative integer per line; blank lines are skipped.

    Raises:
        DataParseError: unreadable file, a malformed line (with its number),
            or a file without any counts.
    """
    input_path = Path(path)
    try:
        lines = input_path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataParseError(f"cannot read counts file {input_path}: {e}") from e

    values = []
    for line_number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if not _COUNT_LINE.match(text):
            raise DataParseError(
                f"{input_path}:{line_number}: expected a non-negative integer, got {text!r}",
                line_number=line_number,
            )
        values.append(int(text))

    if not values:
        raise DataParseError(f"{input_path}: no counts found")
    return CountData.from_values(values)


def aic(loglik: float, k: int) -> float:
    """Akaike information criterion 2k - 2 loglik."""
    if k < 0:
        raise DomainError(f"parameter count must be non-negative, got {k!r}")
    return 2.0 * k - 2.0 * loglik


def log_likelihood(
    data: CountData,
    mp: MeanParams,
    tol: float = DEFAULT_SOLVE_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """Sum of log-pmfs of the data under CMP(mu, nu)."""
    dist = MeanCMP.from_mean(mp.mu, mp.nu, tol, tail_tol)
    return float(sum(count * dist.log_pmf(y) for y, count in data.frequencies().items()))


@dataclass(frozen=True)
class FitResult:
    mu_hat: float
    nu_hat: float
    loglik: float
    aic: float
    converged: bool
    at_boundary: bool
    fitted_variance: float
    n: int
    iterations: int = 0

    def to_dict(self) -> Dict[str, Union[float, int, bool]]:
        return {
            "n": self.n,
            "mu_hat": self.mu_hat,
            "nu_hat": self.nu_hat,
            "loglik": self.loglik,
            "aic": self.aic,
            "fitted_variance": self.fitted_variance,
            "converged": self.converged,
            "at_boundary": self.at_boundary,
            "iterations": self.iterations,
        }


def fit_mle(
    data: CountData,
    settings: Optional[FitSettings] = None,
    event_logger: Optional[EventLogger] = None,
) -> FitResult:
    """
    Fit (mu, nu) by maximum likelihood.

    mu_hat is the sample mean; nu_hat maximizes the profile log-likelihood
    over log(nu) in [log nu_min, log nu_max]. Data with a single distinct
    value has its supremum at nu = infinity: the fit then reports
    nu_hat = nu_max with at_boundary set and logs a warning instead of
    raising.
    """
    settings = settings or FitSettings()
    tol, tail_tol = settings.solver.tol, settings.solver.tail_tol
    mu_hat = data.sample_mean
    start = time.perf_counter()

    def profile(nu: float) -> float:
        return log_likelihood(data, MeanParams(mu_hat, nu), tol, tail_tol)

    if len(data.frequencies()) == 1:
        logger.warning(
            f"all {data.n} counts equal {int(data.values[0])}; the likelihood increases without bound "
            f"in nu, reporting nu_hat = {settings.nu_max:g}"
        )
        nu_hat, converged, at_boundary, iterations = settings.nu_max, True, True, 0
    else:
        log_lo, log_hi = math.log(settings.nu_min), math.log(settings.nu_max)
        res = optimize.minimize_scalar(
            lambda log_nu: -profile(math.exp(log_nu)),
            bounds=(log_lo, log_hi),
            method="bounded",
            options={"xatol": settings.xatol, "maxiter": settings.max_iterations},
        )
        nu_hat = math.exp(float(res.x))
        converged = bool(res.success)
        iterations = int(getattr(res, "nfev", 0))
        at_boundary = float(res.x) >= log_hi - _BOUNDARY_SLACK or float(res.x) <= log_lo + _BOUNDARY_SLACK
        if at_boundary:
            logger.warning(f"nu_hat = {nu_hat:g} is at the search boundary [{settings.nu_min:g}, {settings.nu_max:g}]")
        if not converged:
            logger.warning(f"profile maximization stopped without converging: {res.message}")

    loglik = profile(nu_hat)
    _, fitted_variance = MeanCMP.from_mean(mu_hat, nu_hat, tol, tail_tol).moments()
    result = FitResult(
        mu_hat=mu_hat,
        nu_hat=nu_hat,
        loglik=loglik,
        aic=aic(loglik, CMP_PARAMETERS),
        converged=converged,
        at_boundary=at_boundary,
        fitted_variance=fitted_variance,
        n=data.n,
        iterations=iterations,
    )

    elapsed = time.perf_counter() - start
    logger.info(f"fitted n={data.n}: mu_hat={mu_hat:.6g} nu_hat={nu_hat:.6g} loglik={loglik:.6g}")
    if event_logger is not None:
        event_logger.log_fit(
            n=data.n,
            mu_hat=mu_hat,
            nu_hat=nu_hat,
            loglik=loglik,
            aic=result.aic,
            converged=converged,
            at_boundary=at_boundary,
            execution_time=elapsed,
        )
    return result


@dataclass(frozen=True)
class EmpiricalBaseline:
    """The empirical distribution as a saturated model for the data."""

    probabilities: Dict[int, float]
    loglik: float
    aic: float
    n_parameters: int


def empirical_baseline(data: CountData) -> EmpiricalBaseline:
    """Relative frequencies, their log-likelihood, and AIC with (#distinct - 1) parameters."""
    freqs = data.frequencies()
    n = data.n
    probabilities = {y: count / n for y, count in freqs.items()}
    loglik = float(sum(count * math.log(count / n) for count in freqs.values()))
    k = len(freqs) - 1
    return EmpiricalBaseline(probabilities, loglik, aic(loglik, k), k)
