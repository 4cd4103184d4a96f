#!/usr/bin/env python3
"""
Analysis script for solver event logs from mpcmp-toolkit.

Reads the JSONL file written by `mpcmp --log-file ...` (or a JSON export
from EventLogger.export_events), summarizes solve cost per bracketing
strategy with SolveAnalyzer, and optionally writes the tables as CSV.
"""

import argparse
from pathlib import Path
import sys

# Add the parent directory to the path to allow imports from mpcmp_toolkit
sys.path.append(str(Path(__file__).resolve().parents[1]))

from mpcmp_toolkit.analysis import SolveAnalyzer
from mpcmp_toolkit.logging import EventLogger, FitEvent, GridBuildEvent, SolveEvent


def print_section(title: str) -> None:
    print("\n" + "=" * 50)
    print(title)
    print("=" * 50)


def analyze_log(log_file: Path, output_dir: Path | None, slow_threshold: int) -> None:
    """
    Loads and summarizes solve events from a log file.
    """
    print(f"📁 Loading events from: {log_file}")
    event_logger = EventLogger()
    try:
        loaded = event_logger.load_events_from_file(log_file)
    except (FileNotFoundError, ValueError) as e:
        print(f"❌ Error loading log file: {e}")
        return
    print(f"  ✅ Loaded {loaded} events")

    analyzer = SolveAnalyzer(event_logger.events)
    if analyzer.df.empty:
        print("🤷 No solve events found in the file.")
        return

    print_section("📊 SUMMARY METRICS")
    for key, value in analyzer.get_summary_metrics().items():
        label = key.replace("_", " ").title()
        print(f"  - {label}: {value:.6g}" if isinstance(value, float) else f"  - {label}: {value}")

    print_section("🛠️ STRATEGY PERFORMANCE")
    performance = analyzer.get_strategy_performance()
    print(performance.to_string(index=False))
    speedup = analyzer.get_speedup()
    if speedup:
        print(f"\n  expansion/lemma median time: {speedup['time_ratio']:.2f}x")
        print(f"  expansion/lemma evaluations: {speedup['evaluation_ratio']:.2f}x")

    print_section("🧭 BRACKET RULES")
    print(analyzer.get_rule_breakdown().to_string(index=False))

    print_section("🔥 FAILURES")
    failures = analyzer.get_failure_analysis()
    print(failures.to_string(index=False) if not failures.empty else "  🎉 No failed solves recorded.")

    print_section(f"🐢 SOLVES WITH MORE THAN {slow_threshold} EVALUATIONS")
    slow = analyzer.identify_slow_solves(slow_threshold)
    print(slow.head(20).to_string(index=False) if not slow.empty else "  None.")

    fits = event_logger.get_events_by_type(FitEvent)
    grids = event_logger.get_events_by_type(GridBuildEvent)
    if fits or grids:
        print_section("📦 OTHER EVENTS")
        for fit in fits:
            print(f"  fit: {fit.message}")
        for grid in grids:
            print(f"  grid: {grid.message}")

    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
        performance.to_csv(output_dir / "strategy_performance.csv", index=False)
        failures.to_csv(output_dir / "failures.csv", index=False)
        slow.to_csv(output_dir / "slow_solves.csv", index=False)
        event_logger.export_events(output_dir / "solve_events.csv", event_types=[SolveEvent], format="csv")
        print(f"\n💾 Tables written to: {output_dir}")


def main():
    parser = argparse.ArgumentParser(description="Summarize solver event logs from mpcmp-toolkit.")
    parser.add_argument("log_file", type=Path, help="JSONL event log or JSON export.")
    parser.add_argument("-o", "--output", type=Path, default=None, help="Directory for CSV tables.")
    parser.add_argument(
        "--slow-threshold",
        type=int,
        default=20,
        help="Report solves needing more residual evaluations than this.",
    )
    args = parser.parse_args()

    output_subdir = args.output / args.log_file.stem if args.output else None
    analyze_log(args.log_file, output_subdir, args.slow_threshold)


if __name__ == "__main__":
    main()
