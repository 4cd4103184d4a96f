"""
Timing of bracketed against expansion-only solves.

Both strategies run over the same seeded (mu, nu) workload; every solve is
recorded as a SolveEvent and the comparison is read back through
SolveAnalyzer.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from mpcmp_toolkit.config import (
    DEFAULT_BENCH_MU_RANGE,
    DEFAULT_BENCH_NU_RANGE,
    DEFAULT_BENCH_WORKLOAD,
    SolverSettings,
)
from mpcmp_toolkit.distribution import BracketStrategy, MeanParams, solve
from mpcmp_toolkit.errors import DomainError
from mpcmp_toolkit.logging import EventLogger

from .solver_analyzer import SolveAnalyzer


def bench_workload(
    n: int = DEFAULT_BENCH_WORKLOAD,
    seed: int = 0,
    mu_range: Tuple[float, float] = DEFAULT_BENCH_MU_RANGE,
    nu_range: Tuple[float, float] = DEFAULT_BENCH_NU_RANGE,
) -> List[MeanParams]:
    """n (mu, nu) pairs drawn uniformly from the given ranges."""
    if n < 1:
        raise DomainError(f"workload size must be positive, got {n!r}")
    for name, (lo, hi) in (("mu_range", mu_range), ("nu_range", nu_range)):
        if not 0.0 < lo <= hi:
            raise DomainError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)!r}")

    rng = np.random.default_rng(seed)
    mus = rng.uniform(*mu_range, size=n)
    nus = rng.uniform(*nu_range, size=n)
    return [MeanParams(float(mu), float(nu)) for mu, nu in zip(mus, nus)]


@dataclass(frozen=True)
class BenchmarkReport:
    workload_size: int
    lemma_median_time: float
    expansion_median_time: float
    lemma_mean_evaluations: float
    expansion_mean_evaluations: float
    speedup: float
    evaluation_ratio: float
    strategy_table: pd.DataFrame = field(repr=False)

    def to_dict(self):
        return {
            "workload_size": self.workload_size,
            "lemma_median_time": self.lemma_median_time,
            "expansion_median_time": self.expansion_median_time,
            "lemma_mean_evaluations": self.lemma_mean_evaluations,
            "expansion_mean_evaluations": self.expansion_mean_evaluations,
            "speedup": self.speedup,
            "evaluation_ratio": self.evaluation_ratio,
        }


def run_benchmark(
    workload: List[MeanParams],
    settings: Optional[SolverSettings] = None,
    event_logger: Optional[EventLogger] = None,
) -> BenchmarkReport:
    """Solve the workload with both strategies and compare their cost."""
    settings = settings or SolverSettings()
    recorder = event_logger or EventLogger()

    for strategy in (BracketStrategy.LEMMA, BracketStrategy.EXPANSION):
        for mp in workload:
            solve(mp, settings, strategy=strategy, event_logger=recorder)

    analyzer = SolveAnalyzer(recorder.get_solve_events())
    table = analyzer.get_strategy_performance()
    indexed = table.set_index("strategy")
    ratios = analyzer.get_speedup(BracketStrategy.EXPANSION.value, BracketStrategy.LEMMA.value)

    report = BenchmarkReport(
        workload_size=len(workload),
        lemma_median_time=float(indexed.loc["lemma", "median_time"]),
        expansion_median_time=float(indexed.loc["expansion", "median_time"]),
        lemma_mean_evaluations=float(indexed.loc["lemma", "mean_evaluations"]),
        expansion_mean_evaluations=float(indexed.loc["expansion", "mean_evaluations"]),
        speedup=ratios["time_ratio"],
        evaluation_ratio=ratios["evaluation_ratio"],
        strategy_table=table,
    )
    logger.info(
        f"bench over {report.workload_size} solves: speedup {report.speedup:.2f}x, "
        f"evaluations {report.expansion_mean_evaluations:.1f} vs {report.lemma_mean_evaluations:.1f}"
    )
    return report
