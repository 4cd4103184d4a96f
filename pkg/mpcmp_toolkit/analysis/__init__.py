"""
Statistical analysis built on the mean-parametrized CMP.

This package provides:
- fitting: maximum-likelihood fits, AIC and the empirical baseline
- smoothing: discrete associated-kernel estimates and LSCV bandwidths
- solver_analyzer: pandas summaries of logged solve events
- benchmark: bracketed vs expansion-only solve timing
"""

from .benchmark import BenchmarkReport, bench_workload, run_benchmark
from .fitting import (
    CountData,
    EmpiricalBaseline,
    FitResult,
    aic,
    empirical_baseline,
    fit_mle,
    log_likelihood,
    read_counts,
)
from .smoothing import (
    Bandwidth,
    SmoothedPmf,
    cv_bandwidth,
    cv_score,
    empirical_pmf,
    kernel_weight,
    second_order_check,
    smooth,
)
from .solver_analyzer import SolveAnalyzer

__all__ = [
    "BenchmarkReport",
    "bench_workload",
    "run_benchmark",
    "CountData",
    "EmpiricalBaseline",
    "FitResult",
    "aic",
    "empirical_baseline",
    "fit_mle",
    "log_likelihood",
    "read_counts",
    "Bandwidth",
    "SmoothedPmf",
    "cv_bandwidth",
    "cv_score",
    "empirical_pmf",
    "kernel_weight",
    "second_order_check",
    "smooth",
    "SolveAnalyzer",
]
