"""
Structured event types for numerical work.

Each event captures one unit of work (a solve, a fit, a grid build) with
timing and outcome, so runs can be persisted as JSONL and summarized
afterwards.
"""

import time
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, Optional

from typing_extensions import Self


class LogLevel(Enum):
    """Log levels for numerical events."""
    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


@dataclass
class NumericalEvent:
    """Base class for all numerical events."""

    timestamp: float = field(default_factory=time.time)
    level: LogLevel = LogLevel.INFO
    source: str = ""
    message: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert event to dictionary for serialization."""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["level"] = self.level.value
        data["event_type"] = self.__class__.__name__
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        """Create event from dictionary."""
        data = dict(data)
        if isinstance(data.get("level"), str):
            data["level"] = LogLevel(data["level"])
        data.pop("event_type", None)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class SolveEvent(NumericalEvent):
    """One solve of the mean constraint for eta."""

    mu: float = 0.0
    nu: float = 0.0
    eta: Optional[float] = None
    eta_lo: Optional[float] = None
    eta_hi: Optional[float] = None
    rule: str = ""
    strategy: str = "lemma"
    iterations: int = 0
    evaluations: int = 0
    residual: Optional[float] = None
    execution_time: Optional[float] = None
    success: bool = True
    error_message: Optional[str] = None

    def __post_init__(self):
        if not self.source:
            self.source = f"solver:{self.strategy}"
        if not self.message:
            status = "solved" if self.success else "failed"
            self.message = f"mu={self.mu:.6g} nu={self.nu:.6g} {status} in {self.evaluations} evaluations"
        self.level = LogLevel.INFO if self.success else LogLevel.ERROR


@dataclass
class FitEvent(NumericalEvent):
    """One maximum-likelihood fit."""

    n: int = 0
    mu_hat: Optional[float] = None
    nu_hat: Optional[float] = None
    loglik: Optional[float] = None
    aic: Optional[float] = None
    converged: bool = True
    at_boundary: bool = False
    execution_time: Optional[float] = None

    def __post_init__(self):
        if not self.source:
            self.source = "fitting:profile"
        if not self.message:
            self.message = f"fit of {self.n} counts: nu_hat={self.nu_hat}"
        if self.at_boundary or not self.converged:
            self.level = LogLevel.WARNING


@dataclass
class GridBuildEvent(NumericalEvent):
    """Construction of a LambdaGrid."""

    rows: int = 0
    cols: int = 0
    solve_tolerance: float = 0.0
    execution_time: Optional[float] = None
    success: bool = True
    failed_cell: Optional[Dict[str, float]] = None

    def __post_init__(self):
        if not self.source:
            self.source = "grid:build"
        if not self.message:
            status = "built" if self.success else "failed"
            self.message = f"{self.rows}x{self.cols} grid {status}"
        self.level = LogLevel.INFO if self.success else LogLevel.ERROR


# Event type mapping for deserialization
EVENT_TYPE_MAP = {
    "NumericalEvent": NumericalEvent,
    "SolveEvent": SolveEvent,
    "FitEvent": FitEvent,
    "GridBuildEvent": GridBuildEvent,
}


def event_from_dict(data: Dict[str, Any]) -> NumericalEvent:
    """Create appropriate event instance from dictionary data."""
    event_class = EVENT_TYPE_MAP.get(data.get("event_type", "NumericalEvent"), NumericalEvent)
    try:
        return event_class.from_dict(data)
    except TypeError as e:
        # Unknown shape: keep the payload rather than dropping it
        return NumericalEvent(
            timestamp=data.get("timestamp", time.time()),
            source=data.get("source", "unknown"),
            message=f"Deserialization error: {e}",
            metadata=dict(data),
        )
