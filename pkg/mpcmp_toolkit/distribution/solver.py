"""
Solving the mean constraint for eta = log(lambda).

For fixed nu the CMP is a linear exponential family in eta, so the mean is
strictly increasing in eta and the constraint mean(eta, nu) = mu has a
unique root. The root is searched inside a bracket shaped by the
asymptotic rate bounds:

    integer mu:      [nu*log(mu) + log(a),  nu*log(mu+1) + log(b)],  a = b = 1
    non-integer mu:  [log(D) + nu*log(ceil(mu)),  -log(1-D) + nu*log(ceil(mu))]

with D = mu - floor(mu). Those bounds are only guaranteed for large nu, so
every bracket is validated by the sign of the residual at both ends and
widened geometrically when the check fails.
"""

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from loguru import logger

from mpcmp_toolkit.config import DEFAULT_SOLVE_TOL, SolverSettings
from mpcmp_toolkit.errors import CmpError, ConvergenceError, DomainError
from mpcmp_toolkit.logging import EventLogger
from mpcmp_toolkit.numerics import NEG_INF

from .core import CmpParams, moments

# Rate-bound constants a, b; any positive pair gives a valid asymptotic bracket.
LEMMA_A = 1.0
LEMMA_B = 1.0

_MIN_WIDTH = 1e-13


class BracketRule(str, Enum):
    """Provenance of an EtaBracket."""
    INTEGER_MU = "integer_mu"
    NONINTEGER_MU = "noninteger_mu"
    FALLBACK_EXPANSION = "fallback_expansion"


class BracketStrategy(str, Enum):
    """Where the initial bracket guess comes from."""
    LEMMA = "lemma"
    EXPANSION = "expansion"


@dataclass(frozen=True)
class MeanParams:
    """Mean parametrization (mu, nu) of a CMP distribution."""

    mu: float
    nu: float

    def __post_init__(self):
        for name in ("mu", "nu"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"{name} must be finite and non-negative, got {getattr(self, name)!r}")
            object.__setattr__(self, name, value)

    @property
    def is_integer(self) -> bool:
        return self.mu == math.floor(self.mu)

    @property
    def delta(self) -> float:
        """Fractional part mu - floor(mu)."""
        return self.mu - math.floor(self.mu)


@dataclass(frozen=True)
class EtaBracket:
    """Validated lower/upper bounds on eta."""

    eta_lo: float
    eta_hi: float
    rule: BracketRule

    def __post_init__(self):
        if not self.eta_lo < self.eta_hi:
            raise DomainError(f"empty bracket [{self.eta_lo}, {self.eta_hi}]")

    @property
    def width(self) -> float:
        return self.eta_hi - self.eta_lo

    def contains(self, eta: float, strict: bool = False) -> bool:
        if strict:
            return self.eta_lo < eta < self.eta_hi
        return self.eta_lo <= eta <= self.eta_hi


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one solve, with its cost."""

    mp: MeanParams
    eta: float
    bracket: Optional[EtaBracket]
    iterations: int
    evaluations: int
    residual: float
    strategy: BracketStrategy


class _CountingResidual:
    """
    Counts residual evaluations and returns (mean - mu, variance).

    It may answer +inf without building a table: for nu > 0 the pmf is
    non-decreasing up to its mode, so mean >= mode/2 and a mode at or above
    2*mu + 2 proves the residual positive. nu = 0 with eta >= 0 is the
    divergent side and is reported the same way.
    """

    def __init__(self, mp: MeanParams, tail_tol: float):
        self.mp = mp
        self.tail_tol = tail_tol
        self.evaluations = 0
        self._log_mode_cap = math.log(2.0 * mp.mu + 3.0)

    def __call__(self, eta: float) -> Tuple[float, float]:
        self.evaluations += 1
        mu, nu = self.mp.mu, self.mp.nu

        if eta == NEG_INF:
            return -mu, 0.0
        if nu == 0.0:
            if eta >= 0.0:
                return math.inf, math.nan
            denom = -math.expm1(eta)
            rate = math.exp(eta)
            return rate / denom - mu, rate / (denom * denom)
        if eta / nu >= self._log_mode_cap:
            return math.inf, math.nan

        mean, variance = moments(CmpParams(eta, nu), self.tail_tol)
        return mean - mu, variance


def _residual_scale(mp: MeanParams, tol: float) -> float:
    return tol * max(1.0, mp.mu)


def lemma_bracket(mp: MeanParams) -> EtaBracket:
    """Unvalidated bracket from the asymptotic rate bounds."""
    if mp.mu <= 0.0:
        raise DomainError("mu = 0 has eta = -inf; no bracket is needed", stage="bracket")

    nu = mp.nu
    if mp.is_integer:
        lo = nu * math.log(mp.mu) + math.log(LEMMA_A)
        hi = nu * math.log(mp.mu + 1.0) + math.log(LEMMA_B)
        rule = BracketRule.INTEGER_MU
    else:
        log_ceil = math.log(math.ceil(mp.mu))
        lo = math.log(mp.delta) + nu * log_ceil
        hi = -math.log1p(-mp.delta) + nu * log_ceil
        rule = BracketRule.NONINTEGER_MU

    if not lo < hi:
        # nu = 0 with integer mu collapses the integer rule to a point
        lo, hi = lo - 1.0, hi + 1.0
    return EtaBracket(lo, hi, rule)


def naive_bracket(mp: MeanParams) -> EtaBracket:
    """Unit-radius guess around the Poisson root log(mu), used without rate bounds."""
    if mp.mu <= 0.0:
        raise DomainError("mu = 0 has eta = -inf; no bracket is needed", stage="bracket")
    center = math.log(mp.mu)
    return EtaBracket(center - 1.0, center + 1.0, BracketRule.FALLBACK_EXPANSION)


def _validate(
    initial: EtaBracket,
    residual_fn: _CountingResidual,
    ftol: float,
    max_expansions: int,
) -> Tuple[EtaBracket, float, float]:
    """
    Sign-check both ends of a bracket, widening it until it straddles the root.

    Each failed check moves the bracket past the failing end and doubles its
    width; the failing end becomes the new opposite bound.
    """
    lo, hi, rule = initial.eta_lo, initial.eta_hi, initial.rule
    f_lo, _ = residual_fn(lo)
    f_hi, _ = residual_fn(hi)
    width = hi - lo

    for expansion in range(max_expansions + 1):
        lo_ok = f_lo <= ftol
        hi_ok = f_hi >= -ftol
        if lo_ok and hi_ok:
            return EtaBracket(lo, hi, rule), f_lo, f_hi
        if expansion == max_expansions:
            break

        rule = BracketRule.FALLBACK_EXPANSION
        if not lo_ok:
            hi, f_hi = lo, f_lo
            lo = lo - width
            f_lo, _ = residual_fn(lo)
        else:
            lo, f_lo = hi, f_hi
            hi = hi + width
            f_hi, _ = residual_fn(hi)
        width *= 2.0

    raise ConvergenceError(
        f"could not bracket eta for mu={residual_fn.mp.mu}, nu={residual_fn.mp.nu} "
        f"after {max_expansions} expansions",
        stage="bracket",
        details={"mu": residual_fn.mp.mu, "nu": residual_fn.mp.nu, "eta_lo": lo, "eta_hi": hi},
    )


def _find_root(
    residual_fn: _CountingResidual,
    bracket: EtaBracket,
    f_lo: float,
    f_hi: float,
    ftol: float,
    settings: SolverSettings,
) -> Tuple[float, int, float]:
    """
    Safeguarded Newton iteration inside a validated bracket.

    The derivative of the mean with respect to eta is the variance, which
    comes with every residual evaluation. A Newton step is taken only when it
    stays strictly inside the current bracket and is at most half the previous
    step; otherwise the bracket is bisected.

    Returns:
        (eta, iterations, residual)
    """
    if abs(f_lo) <= ftol:
        return bracket.eta_lo, 0, f_lo
    if abs(f_hi) <= ftol:
        return bracket.eta_hi, 0, f_hi

    lo, hi = bracket.eta_lo, bracket.eta_hi
    x = 0.5 * (lo + hi)
    previous_step = hi - lo
    best_x, best_f = x, math.inf

    for iteration in range(1, settings.max_iterations + 1):
        f, variance = residual_fn(x)
        if abs(f) < abs(best_f):
            best_x, best_f = x, f
        if abs(f) <= ftol:
            return x, iteration, f

        if f < 0.0:
            lo = x
        else:
            hi = x

        if hi - lo <= _MIN_WIDTH * max(1.0, abs(x)):
            logger.warning(
                f"bracket collapsed at eta={best_x!r} with residual {best_f:.3e} "
                f"(target {ftol:.1e}) for mu={residual_fn.mp.mu}, nu={residual_fn.mp.nu}"
            )
            return best_x, iteration, best_f

        candidate = None
        if settings.newton and math.isfinite(f) and math.isfinite(variance) and variance > 0.0:
            step = -f / variance
            if lo < x + step < hi and abs(step) <= 0.5 * abs(previous_step):
                candidate = x + step
        if candidate is None:
            candidate = 0.5 * (lo + hi)

        previous_step = candidate - x
        x = candidate

    raise ConvergenceError(
        f"solve did not converge in {settings.max_iterations} iterations "
        f"for mu={residual_fn.mp.mu}, nu={residual_fn.mp.nu}",
        stage="solve",
        details={"mu": residual_fn.mp.mu, "nu": residual_fn.mp.nu, "eta": best_x, "residual": best_f},
    )


def bracket(mp: MeanParams, settings: Optional[SolverSettings] = None) -> EtaBracket:
    """Return the sign-validated rate-bound bracket for mp."""
    settings = settings or SolverSettings()
    residual_fn = _CountingResidual(mp, settings.tail_tol)
    validated, _, _ = _validate(
        lemma_bracket(mp), residual_fn, _residual_scale(mp, settings.tol), settings.max_expansions
    )
    return validated


def mean_residual(eta: float, mp: MeanParams, tail_tol: Optional[float] = None) -> float:
    """Return mean(eta, nu) - mu."""
    if eta == NEG_INF:
        return -mp.mu
    kwargs = {} if tail_tol is None else {"tail_tol": tail_tol}
    mean, _ = moments(CmpParams(eta, mp.nu), **kwargs)
    return mean - mp.mu


def solve(
    mp: MeanParams,
    settings: Optional[SolverSettings] = None,
    strategy: BracketStrategy = BracketStrategy.LEMMA,
    event_logger: Optional[EventLogger] = None,
) -> SolveResult:
    """
    Solve the mean constraint for eta.

    mu = 0 returns eta = -inf; nu = 0 uses the geometric closed form
    eta = log(mu / (1 + mu)). Otherwise the root is located inside a
    validated bracket to |mean - mu| <= tol * max(1, mu).

    Raises:
        ConvergenceError: if no bracket is found within the expansion budget
            or the iteration budget is exhausted.
    """
    settings = settings or SolverSettings()
    strategy = BracketStrategy(strategy)
    start = time.perf_counter()
    residual_fn = _CountingResidual(mp, settings.tail_tol)

    try:
        if mp.mu == 0.0:
            result = SolveResult(mp, NEG_INF, None, 0, 0, 0.0, strategy)
        elif mp.nu == 0.0:
            eta = math.log(mp.mu) - math.log1p(mp.mu)
            result = SolveResult(mp, eta, None, 0, 0, residual_fn(eta)[0], strategy)
        else:
            initial = lemma_bracket(mp) if strategy is BracketStrategy.LEMMA else naive_bracket(mp)
            ftol = _residual_scale(mp, settings.tol)
            validated, f_lo, f_hi = _validate(initial, residual_fn, ftol, settings.max_expansions)
            eta, iterations, residual = _find_root(residual_fn, validated, f_lo, f_hi, ftol, settings)
            result = SolveResult(mp, eta, validated, iterations, residual_fn.evaluations, residual, strategy)
    except CmpError as e:
        if event_logger is not None:
            event_logger.log_solve(
                mu=mp.mu,
                nu=mp.nu,
                strategy=strategy.value,
                evaluations=residual_fn.evaluations,
                execution_time=time.perf_counter() - start,
                success=False,
                error_message=str(e),
            )
        raise

    elapsed = time.perf_counter() - start
    logger.debug(
        f"solved mu={mp.mu} nu={mp.nu}: eta={result.eta!r} "
        f"({result.evaluations} evaluations, {strategy.value})"
    )
    if event_logger is not None:
        event_logger.log_solve(
            mu=mp.mu,
            nu=mp.nu,
            eta=result.eta,
            eta_lo=result.bracket.eta_lo if result.bracket else None,
            eta_hi=result.bracket.eta_hi if result.bracket else None,
            rule=result.bracket.rule.value if result.bracket else "",
            strategy=strategy.value,
            iterations=result.iterations,
            evaluations=result.evaluations,
            residual=result.residual,
            execution_time=elapsed,
        )
    return result


def solve_eta(
    mp: MeanParams,
    tol: float = DEFAULT_SOLVE_TOL,
    settings: Optional[SolverSettings] = None,
) -> float:
    """Return eta = log(lambda(mu, nu)) with |mean - mu| <= tol * max(1, mu)."""
    if settings is None:
        settings = SolverSettings(tol=tol)
    return solve(mp, settings).eta
