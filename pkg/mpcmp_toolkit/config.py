"""
Default settings for mpcmp-toolkit.

Module-level DEFAULT_* constants are the single source of truth for
tolerances; the pydantic models below validate user overrides.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

DEFAULT_SOLVE_TOL = 1e-10
DEFAULT_TAIL_TOL = 1e-14
DEFAULT_MAX_EXPANSIONS = 60
DEFAULT_MAX_ITERATIONS = 200
DEFAULT_MAX_WINDOW = 5_000_000

# Truncation stops only once the current term is this many decades below the peak.
DEFAULT_WORK_DECADES = 60.0

DEFAULT_NU_MIN = 1e-3
DEFAULT_NU_MAX = 1e6
DEFAULT_FIT_XATOL = 1e-6

DEFAULT_LOG_LEVEL = "WARNING"
VALID_LOG_LEVELS = ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]

GRID_FORMAT_VERSION = "mpcmp-grid/1"

DEFAULT_BENCH_WORKLOAD = 500
DEFAULT_BENCH_NU_RANGE = (50.0, 500.0)
DEFAULT_BENCH_MU_RANGE = (1.0, 30.0)


class SolverSettings(BaseModel):
    """Tolerances and iteration policy for solving the mean constraint."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=DEFAULT_SOLVE_TOL, gt=0.0, lt=1.0)
    tail_tol: float = Field(default=DEFAULT_TAIL_TOL, gt=0.0, lt=1.0)
    max_expansions: int = Field(default=DEFAULT_MAX_EXPANSIONS, ge=1)
    max_iterations: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1)
    newton: bool = True


class FitSettings(BaseModel):
    """Search interval and tolerances for the profile-likelihood fit."""

    model_config = ConfigDict(frozen=True)

    nu_min: float = Field(default=DEFAULT_NU_MIN, gt=0.0)
    nu_max: float = Field(default=DEFAULT_NU_MAX, gt=0.0)
    xatol: float = Field(default=DEFAULT_FIT_XATOL, gt=0.0)
    max_iterations: int = Field(default=500, ge=1)
    solver: SolverSettings = Field(default_factory=SolverSettings)

    @model_validator(mode="after")
    def _check_interval(self) -> Self:
        if self.nu_min >= self.nu_max:
            raise ValueError(f"nu_min ({self.nu_min}) must be below nu_max ({self.nu_max})")
        return self
