"""
Precomputed eta over a (log mu, nu) grid.

Cells are filled by the mean solver; queries are answered by bilinear
interpolation in (log mu, nu) and are exact at the knots. Grids persist
as a versioned JSON document with every float written to 17 significant
digits, which round-trips 64-bit values bit-exactly.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from typing_extensions import Self

from mpcmp_toolkit.config import DEFAULT_SOLVE_TOL, GRID_FORMAT_VERSION, SolverSettings
from mpcmp_toolkit.errors import CmpError, ConvergenceError, DomainError, GridFormatError, OutOfRangeError
from mpcmp_toolkit.logging import EventLogger

from .solver import MeanParams, solve


_SNAP_ULPS = 4.0


def _as_knots(values: Sequence[float], name: str) -> np.ndarray:
    knots = np.array(values, dtype=float)
    if knots.ndim != 1 or knots.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d sequence", stage="grid")
    if not np.all(np.isfinite(knots)):
        raise DomainError(f"{name} must be finite", stage="grid")
    if np.any(np.diff(knots) <= 0.0):
        raise DomainError(f"{name} must be strictly increasing", stage="grid")
    return knots


@dataclass(frozen=True)
class LambdaGrid:
    """Solved eta over log-mu rows and nu columns."""

    log_mu_knots: np.ndarray = field(repr=False)
    nu_knots: np.ndarray = field(repr=False)
    eta_values: np.ndarray = field(repr=False)
    solve_tolerance: float
    version: str = GRID_FORMAT_VERSION

    def __post_init__(self):
        log_mu = _as_knots(self.log_mu_knots, "log_mu_knots")
        nu = _as_knots(self.nu_knots, "nu_knots")
        if nu[0] < 0.0:
            raise DomainError("nu_knots must be non-negative", stage="grid")
        eta = np.array(self.eta_values, dtype=float).reshape(log_mu.size, nu.size)
        if not self.solve_tolerance > 0.0:
            raise DomainError("solve_tolerance must be positive", stage="grid")

        for name, arr in (("log_mu_knots", log_mu), ("nu_knots", nu), ("eta_values", eta)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.eta_values.shape

    @property
    def mu_knots(self) -> np.ndarray:
        return np.exp(self.log_mu_knots)

    def monotonicity_violations(self) -> List[Tuple[int, int]]:
        """(row, col) pairs where eta fails to increase from row to row + 1."""
        rows, cols = np.nonzero(np.diff(self.eta_values, axis=0) <= 0.0)
        return list(zip(rows.tolist(), cols.tolist()))

    @property
    def is_monotone(self) -> bool:
        return not self.monotonicity_violations()


def _solve_cell(
    mu: float,
    nu: float,
    settings: SolverSettings,
    event_logger: Optional[EventLogger],
) -> float:
    try:
        return solve(MeanParams(mu, nu), settings, event_logger=event_logger).eta
    except CmpError as e:
        raise type(e)(
            f"grid cell (mu={mu!r}, nu={nu!r}): {e}",
            stage=e.stage,
            details={**e.details, "mu": mu, "nu": nu},
        ) from e


def _build(
    log_mu_knots: np.ndarray,
    mu_values: np.ndarray,
    nu_knots: np.ndarray,
    settings: SolverSettings,
    max_workers: Optional[int],
    event_logger: Optional[EventLogger],
    strict: bool,
) -> LambdaGrid:
    cells = [(mu, nu) for mu in mu_values for nu in nu_knots]
    start = time.perf_counter()

    try:
        if max_workers and max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                etas = list(pool.map(lambda c: _solve_cell(c[0], c[1], settings, event_logger), cells))
        else:
            etas = [_solve_cell(mu, nu, settings, event_logger) for mu, nu in cells]
    except CmpError as e:
        if event_logger is not None:
            event_logger.log_grid_build(
                rows=log_mu_knots.size,
                cols=nu_knots.size,
                solve_tolerance=settings.tol,
                execution_time=time.perf_counter() - start,
                success=False,
                failed_cell={k: e.details[k] for k in ("mu", "nu") if k in e.details},
            )
        raise

    grid = LambdaGrid(log_mu_knots, nu_knots, np.array(etas), settings.tol)
    elapsed = time.perf_counter() - start

    violations = grid.monotonicity_violations()
    if violations:
        message = f"eta is not increasing in log mu at {len(violations)} cells, first at {violations[0]}"
        if strict:
            raise ConvergenceError(message, stage="grid", details={"violations": violations})
        logger.warning(message)
    logger.info(f"built {grid.shape[0]}x{grid.shape[1]} grid in {elapsed:.3f}s")

    if event_logger is not None:
        event_logger.log_grid_build(
            rows=grid.shape[0],
            cols=grid.shape[1],
            solve_tolerance=settings.tol,
            execution_time=elapsed,
        )
    return grid


def build_grid(
    log_mu_knots: Sequence[float],
    nu_knots: Sequence[float],
    tol: float = DEFAULT_SOLVE_TOL,
    settings: Optional[SolverSettings] = None,
    max_workers: Optional[int] = None,
    event_logger: Optional[EventLogger] = None,
    strict: bool = False,
) -> LambdaGrid:
    """
    Solve eta at every (exp(log_mu), nu) knot pair.

    Knot computations are independent and may run on a thread pool;
    results land in disjoint cells and the finished grid is immutable.

    With strict=True a grid whose eta fails to increase along log mu is
    rejected instead of returned with a warning.

    Raises:
        CmpError: the solver failure for the first failing cell, with the
            cell's mu and nu added to its details.
        ConvergenceError: strict is set and the solved grid is not monotone
            in log mu.
    """
    settings = settings or SolverSettings(tol=tol)
    log_mu = _as_knots(log_mu_knots, "log_mu_knots")
    nu = _as_knots(nu_knots, "nu_knots")
    return _build(log_mu, np.exp(log_mu), nu, settings, max_workers, event_logger, strict)


def build_grid_from_means(
    mu_knots: Sequence[float],
    nu_knots: Sequence[float],
    tol: float = DEFAULT_SOLVE_TOL,
    settings: Optional[SolverSettings] = None,
    max_workers: Optional[int] = None,
    event_logger: Optional[EventLogger] = None,
    strict: bool = False,
) -> LambdaGrid:
    """Like build_grid, but solves at the given means so knot queries match solve exactly."""
    settings = settings or SolverSettings(tol=tol)
    mu = _as_knots(mu_knots, "mu_knots")
    if mu[0] <= 0.0:
        raise DomainError("mu_knots must be positive", stage="grid")
    log_mu = np.array([math.log(m) for m in mu])
    nu = _as_knots(nu_knots, "nu_knots")
    return _build(log_mu, mu, nu, settings, max_workers, event_logger, strict)


def _locate(knots: np.ndarray, x: float, name: str) -> Tuple[int, int, float]:
    """Lower index, upper index and weight of x between them."""
    # Snap to a knot within a few ulps so that log(exp(knot)) hits the knot.
    k = int(np.argmin(np.abs(knots - x)))
    if abs(x - knots[k]) <= _SNAP_ULPS * np.finfo(float).eps * max(1.0, abs(knots[k])):
        x = float(knots[k])
    if not knots[0] <= x <= knots[-1]:
        raise OutOfRangeError(
            f"{name}={x!r} outside grid range [{knots[0]!r}, {knots[-1]!r}]",
            details={name: x},
        )
    if knots.size == 1:
        return 0, 0, 0.0
    i = min(int(np.searchsorted(knots, x, side="right")) - 1, knots.size - 2)
    t = (x - knots[i]) / (knots[i + 1] - knots[i])
    return i, i + 1, float(t)


def interpolate_eta(grid: LambdaGrid, mp: MeanParams) -> float:
    """Bilinear interpolation of eta at (log mu, nu); no extrapolation."""
    if mp.mu <= 0.0:
        raise OutOfRangeError(f"mu={mp.mu!r} is below every grid knot", details={"mu": mp.mu})

    i0, i1, t = _locate(grid.log_mu_knots, math.log(mp.mu), "log_mu")
    j0, j1, s = _locate(grid.nu_knots, mp.nu, "nu")
    eta = grid.eta_values

    if t == 0.0 and s == 0.0:
        return float(eta[i0, j0])
    lower = (1.0 - s) * eta[i0, j0] + s * eta[i0, j1]
    upper = (1.0 - s) * eta[i1, j0] + s * eta[i1, j1]
    return float((1.0 - t) * lower + t * upper)


def _fmt(value: float) -> str:
    return "%.17g" % value


class GridDocument(BaseModel):
    """On-disk representation of a LambdaGrid."""

    model_config = ConfigDict(extra="forbid")

    version: str
    solve_tolerance: str
    rows: int
    cols: int
    log_mu_knots: List[str]
    nu_knots: List[str]
    eta_values: List[str]

    @model_validator(mode="after")
    def _check_shape(self) -> Self:
        if len(self.log_mu_knots) != self.rows or len(self.nu_knots) != self.cols:
            raise ValueError("knot counts do not match rows/cols")
        if len(self.eta_values) != self.rows * self.cols:
            raise ValueError(f"expected {self.rows * self.cols} eta values, got {len(self.eta_values)}")
        return self

    @classmethod
    def from_grid(cls, grid: LambdaGrid) -> "GridDocument":
        rows, cols = grid.shape
        return cls(
            version=grid.version,
            solve_tolerance=_fmt(grid.solve_tolerance),
            rows=rows,
            cols=cols,
            log_mu_knots=[_fmt(v) for v in grid.log_mu_knots],
            nu_knots=[_fmt(v) for v in grid.nu_knots],
            eta_values=[_fmt(v) for v in grid.eta_values.ravel(order="C")],
        )

    def to_grid(self) -> LambdaGrid:
        try:
            return LambdaGrid(
                log_mu_knots=[float(v) for v in self.log_mu_knots],
                nu_knots=[float(v) for v in self.nu_knots],
                eta_values=np.array([float(v) for v in self.eta_values]).reshape(self.rows, self.cols),
                solve_tolerance=float(self.solve_tolerance),
                version=self.version,
            )
        except (ValueError, DomainError) as e:
            raise GridFormatError(f"invalid grid contents: {e}") from e


def save_grid(grid: LambdaGrid, path: Union[str, Path]) -> None:
    """Write grid as a self-describing JSON document."""
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(GridDocument.from_grid(grid).model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Saved {grid.shape[0]}x{grid.shape[1]} grid to {output_path}")


def load_grid(path: Union[str, Path]) -> LambdaGrid:
    """
    Read a grid written by save_grid.

    Raises:
        GridFormatError: unreadable file, malformed document, or a format
            version other than the one this library writes.
    """
    input_path = Path(path)
    try:
        text = input_path.read_text(encoding="utf-8")
    except OSError as e:
        raise GridFormatError(f"cannot read grid file {input_path}: {e}") from e

    try:
        document = GridDocument.model_validate_json(text)
    except ValidationError as e:
        raise GridFormatError(f"malformed grid file {input_path}: {e.error_count()} validation errors") from e

    if document.version != GRID_FORMAT_VERSION:
        raise GridFormatError(
            f"unsupported grid format {document.version!r} (expected {GRID_FORMAT_VERSION!r})",
            details={"version": document.version},
        )
    return document.to_grid()
