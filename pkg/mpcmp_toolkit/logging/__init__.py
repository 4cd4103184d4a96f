"""
Structured event logging for mpcmp-toolkit.

This package provides:
- SolveEvent: one solve of the mean constraint, with bracket and cost
- FitEvent: one profile-likelihood fit
- GridBuildEvent: one LambdaGrid construction
- EventLogger: in-memory collection with JSONL persistence and export
"""

from .event_logger import EventLogger
from .events import (
    EVENT_TYPE_MAP,
    FitEvent,
    GridBuildEvent,
    LogLevel,
    NumericalEvent,
    SolveEvent,
    event_from_dict,
)

__all__ = [
    # Event types
    "LogLevel",
    "NumericalEvent",
    "SolveEvent",
    "FitEvent",
    "GridBuildEvent",
    "EVENT_TYPE_MAP",
    "event_from_dict",

    # Logger
    "EventLogger",
]
