"""
EventLogger for structured numerical events with JSONL persistence.
"""

import json
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Type, TypeVar, Union

from loguru import logger

from .events import (
    FitEvent,
    GridBuildEvent,
    LogLevel,
    NumericalEvent,
    SolveEvent,
    event_from_dict,
)

E = TypeVar("E", bound=NumericalEvent)


class EventLogger:
    """
    Structured event logger with JSONL persistence.

    Collects events in memory, optionally appends each one to a JSONL file
    and mirrors it to loguru, and exports the collection for analysis.
    """

    def __init__(
        self,
        log_file: Optional[Union[str, Path]] = None,
        auto_flush: bool = True,
        console_output: bool = False,
        buffer_size: int = 100,
    ):
        """
        Initialize EventLogger.

        Args:
            log_file: Optional path to JSONL log file for persistent storage
            auto_flush: Whether to flush to file after each event
            console_output: Whether to also log events through loguru
            buffer_size: Maximum number of events to buffer before forced flush
        """
        self.events: List[NumericalEvent] = []
        self.log_file = Path(log_file) if log_file else None
        self.auto_flush = auto_flush
        self.console_output = console_output
        self.buffer_size = buffer_size
        self._file_handle: Optional[TextIO] = None
        self._events_since_flush = 0

        self._start_time = time.time()
        self._event_counts = {
            "total": 0,
            "solves": 0,
            "fits": 0,
            "grid_builds": 0,
            "errors": 0,
        }

        if self.log_file:
            self._open_log_file()

    def _open_log_file(self) -> None:
        assert self.log_file is not None
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        self._file_handle = open(self.log_file, "a", encoding="utf-8")
        logger.debug(f"Opened event log file: {self.log_file}")

    def _close_log_file(self) -> None:
        if self._file_handle:
            self._file_handle.close()
            self._file_handle = None
            logger.debug(f"Closed event log file: {self.log_file}")

    def log_event(self, event: NumericalEvent) -> None:
        """Record a structured event."""
        self.events.append(event)

        self._event_counts["total"] += 1
        if isinstance(event, SolveEvent):
            self._event_counts["solves"] += 1
        elif isinstance(event, FitEvent):
            self._event_counts["fits"] += 1
        elif isinstance(event, GridBuildEvent):
            self._event_counts["grid_builds"] += 1
        if event.level in (LogLevel.ERROR, LogLevel.CRITICAL):
            self._event_counts["errors"] += 1

        if self.console_output:
            self._log_to_console(event)

        if self._file_handle:
            self._file_handle.write(json.dumps(event.to_dict(), default=str) + "\n")

        self._events_since_flush += 1
        if self.auto_flush or self._events_since_flush >= self.buffer_size:
            self.flush()

    def _log_to_console(self, event: NumericalEvent) -> None:
        level_map = {
            LogLevel.DEBUG: logger.debug,
            LogLevel.INFO: logger.info,
            LogLevel.WARNING: logger.warning,
            LogLevel.ERROR: logger.error,
            LogLevel.CRITICAL: logger.critical,
        }
        level_map.get(event.level, logger.info)(f"[{event.source}] {event.message}")

    def flush(self) -> None:
        """Flush any buffered data to file."""
        if self._file_handle:
            self._file_handle.flush()
        self._events_since_flush = 0

    def log_solve(self, **kwargs: Any) -> SolveEvent:
        """Convenience method to record a solve."""
        event = SolveEvent(**kwargs)
        self.log_event(event)
        return event

    def log_fit(self, **kwargs: Any) -> FitEvent:
        """Convenience method to record a fit."""
        event = FitEvent(**kwargs)
        self.log_event(event)
        return event

    def log_grid_build(self, **kwargs: Any) -> GridBuildEvent:
        """Convenience method to record a grid build."""
        event = GridBuildEvent(**kwargs)
        self.log_event(event)
        return event

    def log_error(
        self,
        error: Exception,
        source: str = "unknown",
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Record an exception as an error event."""
        self.log_event(
            NumericalEvent(
                level=LogLevel.ERROR,
                source=source,
                message=str(error),
                metadata={
                    **(metadata or {}),
                    "exception_type": type(error).__name__,
                    "stage": getattr(error, "stage", None),
                },
            )
        )

    def get_events_by_type(self, event_type: Type[E]) -> List[E]:
        """Get all events of a specific type."""
        return [event for event in self.events if isinstance(event, event_type)]

    def get_solve_events(self) -> List[SolveEvent]:
        return self.get_events_by_type(SolveEvent)

    def get_statistics(self) -> Dict[str, Any]:
        """Get logging statistics."""
        duration = time.time() - self._start_time
        return {
            "duration_seconds": duration,
            "total_events": len(self.events),
            "event_counts": self._event_counts.copy(),
            "log_file": str(self.log_file) if self.log_file else None,
        }

    def export_events(
        self,
        output_file: Union[str, Path],
        event_types: Optional[List[type]] = None,
        format: str = "json",
    ) -> None:
        """
        Export events to a file.

        Args:
            output_file: Path to output file
            event_types: Optional list of event types to export
            format: Export format ('json', 'jsonl', or 'csv')
        """
        events = self.events
        if event_types:
            events = [e for e in events if isinstance(e, tuple(event_types))]

        output_path = Path(output_file)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        fmt = format.lower()
        if fmt == "json":
            with open(output_path, "w", encoding="utf-8") as f:
                json.dump(
                    {
                        "events": [e.to_dict() for e in events],
                        "metadata": {
                            "export_timestamp": time.time(),
                            "total_events": len(events),
                            "statistics": self.get_statistics(),
                        },
                    },
                    f,
                    indent=2,
                    default=str,
                )
        elif fmt == "jsonl":
            with open(output_path, "w", encoding="utf-8") as f:
                for event in events:
                    f.write(json.dumps(event.to_dict(), default=str) + "\n")
        elif fmt == "csv":
            self._export_csv(events, output_path)
        else:
            raise ValueError(f"Unsupported export format: {format}")

        logger.info(f"Exported {len(events)} events to {output_path}")

    def _export_csv(self, events: List[NumericalEvent], output_path: Path) -> None:
        import pandas as pd

        rows = []
        for event in events:
            row = event.to_dict()
            for key, value in row.pop("metadata", {}).items():
                row[f"metadata_{key}"] = value
            rows.append(row)
        pd.DataFrame(rows).to_csv(output_path, index=False)

    def load_events_from_file(self, input_file: Union[str, Path]) -> int:
        """
        Load events from a JSONL or JSON file.

        Returns:
            Number of events loaded
        """
        input_path = Path(input_file)
        if not input_path.exists():
            raise FileNotFoundError(f"Log file not found: {input_path}")

        with open(input_path, "r", encoding="utf-8") as f:
            if input_path.suffix == ".json":
                data = json.load(f)
                event_dicts = data["events"] if isinstance(data, dict) and "events" in data else data
            else:
                event_dicts = [json.loads(line) for line in f if line.strip()]

        loaded = [event_from_dict(d) for d in event_dicts]
        self.events.extend(loaded)
        logger.info(f"Loaded {len(loaded)} events from {input_path}")
        return len(loaded)

    def close(self) -> None:
        self.flush()
        self._close_log_file()

    def __enter__(self) -> "EventLogger":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()
