"""
Tests for discrete associated-kernel smoothing and bandwidth selection.
"""

from unittest.mock import patch

import numpy as np
import pytest
from scipy import stats

from mpcmp_toolkit.analysis.fitting import CountData
from mpcmp_toolkit.analysis.smoothing import (
    Bandwidth,
    cv_bandwidth,
    cv_score,
    empirical_pmf,
    kernel_weight,
    second_order_check,
    smooth,
)
from mpcmp_toolkit.distribution import MeanCMP, MeanParams, sample
from mpcmp_toolkit.errors import DomainError

H_SEQUENCE = [1.0, 0.1, 0.01, 0.001]
EMPIRICAL_DATASETS = [(0, 0, 1, 3), (2, 4, 4, 5, 7), (10, 11, 11, 12, 9, 10)]


class TestBandwidth:
    """Test suite for Bandwidth."""

    def test_nu_of_h(self):
        """Test the kernel dispersion as the inverse bandwidth."""
        assert Bandwidth(0.25).nu_of_h == 4.0

    @pytest.mark.parametrize("h", [0.0, -1.0, float("inf"), float("nan")])
    def test_invalid(self, h):
        """Test rejection of non-positive or non-finite bandwidths."""
        with pytest.raises(DomainError) as exc_info:
            Bandwidth(h)
        assert exc_info.value.stage == "smooth"


class TestKernelWeight:
    """Test suite for kernel_weight."""

    def test_point_mass_limit(self):
        """Test that a tiny bandwidth gives a point-mass kernel."""
        assert kernel_weight(3, 3, Bandwidth(1e-4)) >= 1.0 - 1e-6

    def test_poisson_kernel(self):
        """Test that h = 1 gives the Poisson kernel."""
        for y in range(8):
            assert kernel_weight(2, y, Bandwidth(1.0)) == pytest.approx(stats.poisson.pmf(y, 2.0), rel=1e-10)

    @pytest.mark.parametrize("h", [2.0, 1.0, 1e-3])
    def test_zero_target(self, h):
        """Test that the kernel at target zero keeps all mass on zero."""
        assert kernel_weight(0, 0, Bandwidth(h)) == 1.0

    def test_bad_target(self):
        """Test rejection of a negative target."""
        with pytest.raises(DomainError):
            kernel_weight(-1, 0, Bandwidth(1.0))


class TestSmooth:
    """Test suite for smooth."""

    def test_recovers_empirical_pmf(self):
        """Test that a tiny bandwidth recovers the empirical pmf."""
        result = smooth(CountData.from_values([0, 0, 1, 3]), Bandwidth(1e-4))
        assert result.estimates.tolist() == pytest.approx([0.5, 0.25, 0.0, 0.25], abs=1e-6)
        assert result.raw_total_mass == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("values", EMPIRICAL_DATASETS)
    def test_empirical_limit(self, values):
        """Test the empirical limit on several samples."""
        data = CountData.from_values(values)
        result = smooth(data, Bandwidth(1e-4))
        assert result.total_variation(empirical_pmf(data)) <= 1e-4

    def test_single_observation(self):
        """Test that one observation at h = 1 gives a Poisson kernel column."""
        result = smooth(CountData.from_values([2]), Bandwidth(1.0), y_max=6)
        expected = [stats.poisson.pmf(2, x) if x > 0 else 0.0 for x in range(7)]
        assert result.estimates.tolist() == pytest.approx(expected, abs=1e-12)
        assert result.y_max == 6

    def test_renormalized(self):
        """Test that renormalized estimates sum to one."""
        data = CountData.from_values([1, 2, 2, 5])
        result = smooth(data, Bandwidth(0.5), y_max=8, renormalize=True)
        assert result.renormalized
        assert result.estimates.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(result.estimates >= 0.0)

    def test_raw_estimates_non_negative(self):
        """Test that raw estimates are non-negative."""
        result = smooth(CountData.from_values([0, 3, 3, 9]), Bandwidth(2.0), y_max=12)
        assert np.all(result.estimates >= 0.0)
        assert not result.renormalized

    def test_threads_match_serial(self):
        """Test that a threaded smooth matches the serial one."""
        data = CountData.from_values([1, 2, 2, 5, 6])
        serial = smooth(data, Bandwidth(0.3), y_max=9)
        threaded = smooth(data, Bandwidth(0.3), y_max=9, max_workers=4)
        assert np.array_equal(serial.estimates, threaded.estimates)

    def test_y_max_below_data(self):
        """Test rejection of a support bound below the data."""
        with pytest.raises(DomainError):
            smooth(CountData.from_values([1, 5]), Bandwidth(1.0), y_max=4)


class TestSecondOrderCheck:
    """Test suite for the kernel moment conditions."""

    def test_examples(self):
        """Test kernel mean gap and variance on hand-checked cases."""
        gap, _ = second_order_check(3, Bandwidth(0.1))
        assert gap <= 1e-8
        _, variance = second_order_check(3, Bandwidth(1e-3))
        assert variance <= 1e-2
        _, poisson_variance = second_order_check(3, Bandwidth(1.0))
        assert poisson_variance == pytest.approx(3.0, abs=1e-8)

    @pytest.mark.parametrize("x", [1, 3, 10])
    def test_variance_shrinks_with_bandwidth(self, x):
        """Test that kernel variance shrinks with the bandwidth."""
        checks = [second_order_check(x, Bandwidth(h)) for h in H_SEQUENCE]
        variances = [variance for _, variance in checks]
        assert all(gap <= 1e-8 for gap, _ in checks)
        assert all(a > b for a, b in zip(variances, variances[1:]))
        assert variances[-1] <= 1e-2

    def test_zero_target_has_no_spread(self):
        """Test that the kernel at zero has no spread."""
        for h in H_SEQUENCE:
            assert second_order_check(0, Bandwidth(h)) == (0.0, 0.0)


class TestCrossValidation:
    """Test suite for cv_score and cv_bandwidth."""

    def setup_method(self):
        self.data = CountData.from_values([1, 2, 2, 3, 3, 3, 4, 6])

    def test_singleton_grid(self):
        """Test that a one-candidate grid returns that candidate."""
        assert cv_bandwidth(self.data, [0.5]).h == 0.5

    def test_singleton_grid_single_observation(self):
        """Test that a one-candidate grid needs no cross-validation score."""
        assert cv_bandwidth(CountData.from_values([3]), [0.5]).h == 0.5

    def test_empty_grid(self):
        """Test rejection of an empty bandwidth grid."""
        with pytest.raises(DomainError):
            cv_bandwidth(self.data, [])

    def test_needs_two_observations(self):
        """Test that the CV score needs at least two observations."""
        with pytest.raises(DomainError):
            cv_score(CountData.from_values([3]), Bandwidth(1.0))

    @patch("mpcmp_toolkit.analysis.smoothing.cv_score")
    def test_ties_go_to_smaller_bandwidth(self, mock_score):
        """Test that equal scores select the smaller bandwidth."""
        mock_score.return_value = -0.25
        assert cv_bandwidth(self.data, [1.0, 0.2, 0.5]).h == 0.2

    @patch("mpcmp_toolkit.analysis.smoothing.cv_score")
    def test_selects_minimum(self, mock_score):
        """Test that the lowest score wins."""
        scores = {0.2: -0.1, 0.5: -0.3, 1.0: -0.2}
        mock_score.side_effect = lambda data, bw, *args: scores[bw.h]
        assert cv_bandwidth(self.data, [1.0, 0.2, 0.5]).h == 0.5

    def test_score_matches_definition(self):
        """Test the CV score against a direct leave-one-out computation."""
        bw = Bandwidth(0.5)
        y_max = 9
        values = self.data.values
        n = self.data.n
        estimate = smooth(self.data, bw, y_max=y_max).estimates
        loo = []
        for i, yi in enumerate(values):
            rest = np.delete(values, i)
            loo.append(np.mean([kernel_weight(int(yi), int(yj), bw) for yj in rest]))
        expected = float(np.square(estimate).sum() - 2.0 / n * np.sum(loo))
        assert cv_score(self.data, bw, y_max=y_max) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.slow
    def test_selection_beats_worst_member(self):
        """Test that the selected bandwidth beats the worst grid member."""
        draws = sample(500, MeanParams(5.0, 4.0), seed=17)
        data = CountData(draws)
        grid = [0.01, 0.1, 0.5, 1.0, 2.0]
        y_max = int(draws.max())
        truth = MeanCMP.from_mean(5.0, 4.0)
        true_pmf = np.array([truth.pmf(y) for y in range(y_max + 1)])

        def ise(h):
            return float(np.square(smooth(data, Bandwidth(h), y_max=y_max).estimates - true_pmf).sum())

        selected = cv_bandwidth(data, grid, y_max=y_max)
        assert ise(selected.h) < max(ise(h) for h in grid)
