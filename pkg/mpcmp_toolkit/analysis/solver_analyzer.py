"""
Analysis of structured solve events from EventLogger.

Turns SolveEvent records into a DataFrame and summarizes cost per
bracketing strategy, bracket provenance and failures.
"""

from typing import Any, Dict, List, Union

import pandas as pd

from mpcmp_toolkit.logging import NumericalEvent, SolveEvent, event_from_dict


class SolveAnalyzer:
    """
    Analyzer for SolveEvent collections.

    Accepts SolveEvent objects, their dict form, or an exported JSON
    document with an 'events' key.
    """

    def __init__(self, log_data: Union[List[Union[NumericalEvent, Dict[str, Any]]], Dict[str, Any]]):
        self.solve_events: List[SolveEvent] = []
        if not log_data:
            self.df = pd.DataFrame()
        else:
            self.df = self._preprocess(log_data)

    def _preprocess(self, log_data: Union[List[Any], Dict[str, Any]]) -> pd.DataFrame:
        raw = log_data.get("events", []) if isinstance(log_data, dict) else log_data

        for item in raw:
            event = event_from_dict(item) if isinstance(item, dict) else item
            if isinstance(event, SolveEvent):
                self.solve_events.append(event)

        if not self.solve_events:
            return pd.DataFrame()

        df = pd.DataFrame([event.to_dict() for event in self.solve_events])
        df["datetime"] = pd.to_datetime(df["timestamp"], unit="s", errors="coerce")
        for column in ("execution_time", "evaluations", "iterations", "residual", "eta"):
            df[column] = pd.to_numeric(df[column], errors="coerce")
        df["execution_time"] = df["execution_time"].fillna(0.0)
        return df

    def get_summary_metrics(self) -> Dict[str, Any]:
        if self.df.empty:
            return {"total_solves": 0}

        failed = int((~self.df["success"]).sum())
        return {
            "total_solves": len(self.df),
            "failed_solves": failed,
            "success_rate": 1.0 - failed / len(self.df),
            "total_execution_time": float(self.df["execution_time"].sum()),
            "median_execution_time": float(self.df["execution_time"].median()),
            "mean_evaluations": float(self.df["evaluations"].mean()),
            "fallback_rate": float((self.df["rule"] == "fallback_expansion").mean()),
        }

    def get_strategy_performance(self) -> pd.DataFrame:
        """Cost per bracketing strategy, sorted by median time."""
        if self.df.empty:
            return pd.DataFrame()

        performance = self.df.groupby("strategy").agg(
            solves=("strategy", "count"),
            successful=("success", "sum"),
            median_time=("execution_time", "median"),
            mean_time=("execution_time", "mean"),
            total_time=("execution_time", "sum"),
            mean_evaluations=("evaluations", "mean"),
            max_evaluations=("evaluations", "max"),
            mean_iterations=("iterations", "mean"),
        ).reset_index()
        performance["success_rate"] = performance["successful"] / performance["solves"]
        return performance.sort_values("median_time")

    def get_rule_breakdown(self) -> pd.DataFrame:
        """How often each bracket provenance occurs per strategy."""
        if self.df.empty:
            return pd.DataFrame()

        solved = self.df[self.df["success"]]
        breakdown = solved.groupby(["strategy", "rule"]).size().rename("solves").reset_index()
        totals = breakdown.groupby("strategy")["solves"].transform("sum")
        breakdown["share"] = breakdown["solves"] / totals
        return breakdown

    def get_speedup(self, baseline: str = "expansion", candidate: str = "lemma") -> Dict[str, float]:
        """Median-time and mean-evaluation ratios of baseline over candidate."""
        performance = self.get_strategy_performance()
        if performance.empty:
            return {}

        indexed = performance.set_index("strategy")
        if baseline not in indexed.index or candidate not in indexed.index:
            return {}

        base, cand = indexed.loc[baseline], indexed.loc[candidate]
        return {
            "time_ratio": float(base["median_time"] / cand["median_time"]) if cand["median_time"] > 0 else float("inf"),
            "evaluation_ratio": float(base["mean_evaluations"] / cand["mean_evaluations"]),
        }

    def get_failure_analysis(self) -> pd.DataFrame:
        if self.df.empty:
            return pd.DataFrame()
        failed = self.df[~self.df["success"]]
        return failed[["mu", "nu", "strategy", "evaluations", "error_message"]].reset_index(drop=True)

    def identify_slow_solves(self, evaluation_threshold: int = 20) -> pd.DataFrame:
        """Solves that needed more residual evaluations than the threshold."""
        if self.df.empty:
            return pd.DataFrame()
        slow = self.df[self.df["evaluations"] > evaluation_threshold]
        return slow[["mu", "nu", "strategy", "rule", "evaluations", "execution_time"]].sort_values(
            "evaluations", ascending=False
        )
