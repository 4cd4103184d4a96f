"""
Tests for solve-event analysis and the strategy benchmark.
"""

import pytest

from mpcmp_toolkit.analysis import SolveAnalyzer, bench_workload, run_benchmark
from mpcmp_toolkit.errors import DomainError
from mpcmp_toolkit.logging import EventLogger, FitEvent, SolveEvent


def synthetic_events():
    events = []
    for i in range(4):
        events.append(SolveEvent(mu=2.0 + i, nu=50.0, strategy="lemma", rule="noninteger_mu", evaluations=6, iterations=5, execution_time=0.001))
        events.append(SolveEvent(mu=2.0 + i, nu=50.0, strategy="expansion", rule="fallback_expansion", evaluations=30, iterations=20, execution_time=0.004))
    events.append(SolveEvent(mu=9.0, nu=400.0, strategy="expansion", rule="fallback_expansion", evaluations=61, success=False, error_message="no bracket", execution_time=0.01))
    events.append(FitEvent(n=7, nu_hat=52.0))
    return events


class TestSolveAnalyzer:
    """Test suite for SolveAnalyzer."""

    def setup_method(self):
        self.analyzer = SolveAnalyzer(synthetic_events())

    def test_only_solves_are_kept(self):
        """Test that only solve events enter the frame."""
        assert len(self.analyzer.solve_events) == 9
        assert len(self.analyzer.df) == 9

    def test_summary_metrics(self):
        """Test overall solve metrics."""
        summary = self.analyzer.get_summary_metrics()
        assert summary["total_solves"] == 9
        assert summary["failed_solves"] == 1
        assert summary["success_rate"] == pytest.approx(8 / 9)
        assert summary["fallback_rate"] == pytest.approx(5 / 9)

    def test_strategy_performance(self):
        """Test per-strategy cost."""
        table = self.analyzer.get_strategy_performance()
        assert table["strategy"].tolist() == ["lemma", "expansion"]
        lemma = table.set_index("strategy").loc["lemma"]
        assert lemma["solves"] == 4
        assert lemma["mean_evaluations"] == 6.0
        assert lemma["success_rate"] == 1.0

    def test_speedup(self):
        """Test time and evaluation ratios of the expansion baseline over rate bounds."""
        ratios = self.analyzer.get_speedup()
        assert ratios["time_ratio"] == pytest.approx(4.0)
        assert ratios["evaluation_ratio"] == pytest.approx((4 * 30 + 61) / 5 / 6)

    def test_speedup_missing_strategy(self):
        """Test that an unknown baseline gives no ratios."""
        assert self.analyzer.get_speedup(baseline="nonexistent") == {}

    def test_rule_breakdown(self):
        """Test bracket rule shares per strategy."""
        breakdown = self.analyzer.get_rule_breakdown()
        assert set(breakdown["rule"]) == {"noninteger_mu", "fallback_expansion"}
        assert breakdown["share"].tolist() == [1.0, 1.0]

    def test_failures_and_slow_solves(self):
        """Test the failure and slow-solve tables."""
        failures = self.analyzer.get_failure_analysis()
        assert failures["error_message"].tolist() == ["no bracket"]
        slow = self.analyzer.identify_slow_solves(evaluation_threshold=20)
        assert slow["evaluations"].tolist() == [61, 30, 30, 30, 30]

    def test_accepts_exported_document(self):
        """Test loading an exported events document."""
        document = {"events": [e.to_dict() for e in synthetic_events()]}
        assert len(SolveAnalyzer(document).df) == 9

    def test_empty(self):
        """Test an analyzer without events."""
        analyzer = SolveAnalyzer([])
        assert analyzer.get_summary_metrics() == {"total_solves": 0}
        assert analyzer.get_strategy_performance().empty
        assert analyzer.get_speedup() == {}


class TestBenchmark:
    """Test suite for bench_workload and run_benchmark."""

    def test_workload_is_seeded(self):
        """Test that the workload depends only on its seed."""
        first = bench_workload(25, seed=3)
        assert first == bench_workload(25, seed=3)
        assert all(1.0 <= mp.mu <= 30.0 and 50.0 <= mp.nu <= 500.0 for mp in first)

    @pytest.mark.parametrize("kwargs", [{"n": 0}, {"n": 5, "mu_range": (0.0, 1.0)}, {"n": 5, "nu_range": (5.0, 1.0)}])
    def test_invalid_workload(self, kwargs):
        """Test rejection of invalid workload settings."""
        with pytest.raises(DomainError):
            bench_workload(**kwargs)

    def test_run_benchmark(self):
        """Test that a small benchmark runs both strategies and rate bounds cost less."""
        event_logger = EventLogger()
        report = run_benchmark(bench_workload(10, seed=1), event_logger=event_logger)

        assert report.workload_size == 10
        assert len(event_logger.get_solve_events()) == 20
        assert report.lemma_mean_evaluations < report.expansion_mean_evaluations
        assert report.evaluation_ratio > 1.0
        assert set(report.to_dict()) >= {"speedup", "evaluation_ratio", "lemma_median_time"}
