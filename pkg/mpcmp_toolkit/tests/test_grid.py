"""
Tests for eta grids, interpolation and persistence.
"""

import json
import math
from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest

from mpcmp_toolkit.distribution.core import CmpParams, moments
from mpcmp_toolkit.distribution.grid import (
    LambdaGrid,
    build_grid,
    build_grid_from_means,
    interpolate_eta,
    load_grid,
    save_grid,
)
from mpcmp_toolkit.distribution.solver import MeanParams, solve_eta
from mpcmp_toolkit.errors import ConvergenceError, DomainError, GridFormatError, OutOfRangeError
from mpcmp_toolkit.logging import EventLogger, GridBuildEvent


class TestBuildGrid:
    """Test suite for grid construction."""

    def setup_method(self):
        self.mu_knots = [1.0, 3.0, 9.0]
        self.nu_knots = [1.0, 2.0, 4.0]
        self.grid = build_grid_from_means(self.mu_knots, self.nu_knots)

    def test_single_cell(self):
        """Test a one-cell grid built on a log-mu knot."""
        grid = build_grid([math.log(2.0)], [1.0])
        assert grid.shape == (1, 1)
        assert grid.eta_values[0, 0] == pytest.approx(math.log(2.0), abs=1e-12)
        assert interpolate_eta(grid, MeanParams(2.0, 1.0)) == grid.eta_values[0, 0]

    def test_knots_reproduce_solve(self):
        """Test that knot queries return the solver value exactly."""
        for mu in self.mu_knots:
            for nu in self.nu_knots:
                assert interpolate_eta(self.grid, MeanParams(mu, nu)) == solve_eta(MeanParams(mu, nu))

    def test_monotone_in_log_mu(self):
        """Test that eta increases along log mu."""
        assert self.grid.monotonicity_violations() == []
        assert np.all(np.diff(self.grid.eta_values, axis=0) > 0.0)

    def test_threaded_build_matches_serial(self):
        """Test that a threaded build matches the serial one bit for bit."""
        threaded = build_grid_from_means(self.mu_knots, self.nu_knots, max_workers=4)
        assert np.array_equal(threaded.eta_values, self.grid.eta_values)

    def test_rejects_unsorted_knots(self):
        """Test rejection of unsorted or non-positive knots."""
        with pytest.raises(DomainError):
            build_grid([1.0, 0.5], [1.0])
        with pytest.raises(DomainError):
            build_grid_from_means([0.0, 1.0], [1.0])

    @patch("mpcmp_toolkit.distribution.grid.solve")
    def test_failure_names_the_cell(self, mock_solve):
        """Test that a failing cell is named in the error and the build event."""
        mock_solve.side_effect = ConvergenceError("no bracket", stage="bracket")
        event_logger = EventLogger()

        with pytest.raises(ConvergenceError) as exc_info:
            build_grid_from_means([2.0], [5.0], event_logger=event_logger)

        assert exc_info.value.stage == "bracket"
        assert exc_info.value.details["mu"] == 2.0
        assert exc_info.value.details["nu"] == 5.0
        assert "grid cell" in str(exc_info.value)
        event = event_logger.get_events_by_type(GridBuildEvent)[0]
        assert event.success is False
        assert event.failed_cell == {"mu": 2.0, "nu": 5.0}

    def test_build_event(self):
        """Test that a build records one grid event and its solves."""
        event_logger = EventLogger()
        build_grid_from_means([1.0, 2.0], [1.0], event_logger=event_logger)
        event = event_logger.get_events_by_type(GridBuildEvent)[0]
        assert (event.rows, event.cols) == (2, 1)
        assert event.success is True
        assert len(event_logger.get_solve_events()) == 2

    def test_monotonicity_violations_detected(self):
        """Test detection of eta decreasing along log mu."""
        grid = LambdaGrid([0.0, 1.0], [1.0], np.array([[1.0], [0.5]]), 1e-10)
        assert grid.monotonicity_violations() == [(0, 0)]
        assert not grid.is_monotone

    def test_strict_build_accepts_monotone_grid(self):
        """Test that a strict build returns a grid that increases along log mu."""
        grid = build_grid_from_means(self.mu_knots, self.nu_knots, strict=True)
        assert grid.is_monotone
        assert np.array_equal(grid.eta_values, self.grid.eta_values)

    @patch("mpcmp_toolkit.distribution.grid.solve")
    def test_strict_build_rejects_decreasing_eta(self, mock_solve):
        """Test that a strict build raises where a default build only warns."""
        mock_solve.side_effect = lambda mp, *args, **kwargs: SimpleNamespace(eta=1.0 / mp.mu)

        with pytest.raises(ConvergenceError) as exc_info:
            build_grid_from_means([1.0, 2.0], [1.0], strict=True)
        assert exc_info.value.stage == "grid"
        assert exc_info.value.details["violations"] == [(0, 0)]

        with patch("mpcmp_toolkit.distribution.grid.logger") as mock_logger:
            grid = build_grid_from_means([1.0, 2.0], [1.0])
        assert not grid.is_monotone
        mock_logger.warning.assert_called_once()


class TestInterpolateEta:
    """Test suite for bilinear interpolation."""

    def setup_method(self):
        self.grid = LambdaGrid(
            log_mu_knots=[0.0, 1.0],
            nu_knots=[1.0, 3.0],
            eta_values=np.array([[0.0, 2.0], [1.0, 5.0]]),
            solve_tolerance=1e-10,
        )

    def test_bilinear_value(self):
        """Test bilinear interpolation at a cell centre."""
        mid = interpolate_eta(self.grid, MeanParams(math.exp(0.5), 2.0))
        assert mid == pytest.approx((0.0 + 2.0 + 1.0 + 5.0) / 4.0)

    def test_upper_corner_is_exact(self):
        """Test the value at the upper corner of the grid."""
        assert interpolate_eta(self.grid, MeanParams(math.exp(1.0), 3.0)) == pytest.approx(5.0, abs=1e-15)

    def test_top_log_mu_knot_reachable_from_mean(self):
        """Test that mu = exp(knot) hits the top knot even when log(exp(knot)) rounds past it."""
        for hi in np.linspace(0.5, 3.4, 300):
            grid = LambdaGrid([0.0, hi], [1.0], np.array([[0.0], [1.0]]), 1e-10)
            assert interpolate_eta(grid, MeanParams(math.exp(hi), 1.0)) == 1.0, hi

    def test_log_mu_knots_exact_after_build(self):
        """Test that every knot of a grid built on log-mu knots returns its stored eta."""
        log_mu_knots = [0.0, 0.6163879598662207, 1.2]
        nu_knots = [1.0, 2.0]
        grid = build_grid(log_mu_knots, nu_knots)
        for i, log_mu in enumerate(log_mu_knots):
            for j, nu in enumerate(nu_knots):
                assert interpolate_eta(grid, MeanParams(math.exp(log_mu), nu)) == grid.eta_values[i, j]

    def test_values_off_the_knots_are_not_snapped(self):
        """Test that a point well inside a cell is still interpolated."""
        value = interpolate_eta(self.grid, MeanParams(math.exp(1e-6), 1.0))
        assert value == pytest.approx(1e-6, rel=1e-6)

    @pytest.mark.parametrize("mu, nu", [(0.5, 2.0), (math.exp(1.5), 2.0), (1.5, 0.5), (1.5, 3.5), (0.0, 2.0)])
    def test_out_of_range(self, mu, nu):
        """Test that queries outside the grid are rejected."""
        with pytest.raises(OutOfRangeError) as exc_info:
            interpolate_eta(self.grid, MeanParams(mu, nu))
        assert exc_info.value.stage == "grid"


@pytest.mark.slow
class TestDenseGrid:
    """Test suite for the dense grid fixtures."""

    def test_roundtrip_and_monotonicity(self):
        """Test mean recovery at every knot of a dense grid."""
        mu_knots = np.geomspace(1.0, 30.0, 20)
        nu_knots = np.linspace(1.0, 100.0, 20)
        grid = build_grid_from_means(mu_knots, nu_knots, max_workers=4)

        assert grid.monotonicity_violations() == []
        for i, mu in enumerate(mu_knots):
            for j, nu in enumerate(nu_knots):
                mean, _ = moments(CmpParams(grid.eta_values[i, j], nu))
                assert abs(mean - mu) <= grid.solve_tolerance * max(1.0, mu)

    def test_midpoint_accuracy_on_low_dispersion_band(self):
        """Test interpolation error at cell midpoints for nu between 1 and 2."""
        mu_knots = np.geomspace(1.0, 30.0, 40)
        nu_knots = np.linspace(1.0, 2.0, 11)
        grid = build_grid_from_means(mu_knots, nu_knots, max_workers=4)

        log_mu = np.log(mu_knots)
        for i in range(len(mu_knots) - 1):
            for j in range(len(nu_knots) - 1):
                mp = MeanParams(math.exp(0.5 * (log_mu[i] + log_mu[i + 1])), 0.5 * (nu_knots[j] + nu_knots[j + 1]))
                assert abs(interpolate_eta(grid, mp) - solve_eta(mp)) <= 1e-3, (mp.mu, mp.nu)


class TestGridPersistence:
    """Test suite for save_grid and load_grid."""

    def setup_method(self):
        self.grid = build_grid_from_means([1.0, 4.321, 27.43], [0.5, 52.26])

    def test_bit_exact_roundtrip(self, tmp_path):
        """Test that a saved grid loads back bit for bit."""
        path = tmp_path / "grid.json"
        save_grid(self.grid, path)
        loaded = load_grid(path)

        assert np.array_equal(loaded.eta_values, self.grid.eta_values)
        assert np.array_equal(loaded.log_mu_knots, self.grid.log_mu_knots)
        assert np.array_equal(loaded.nu_knots, self.grid.nu_knots)
        assert loaded.solve_tolerance == self.grid.solve_tolerance

    def test_numbers_are_strings(self, tmp_path):
        """Test that the document stores floats as strings."""
        path = tmp_path / "grid.json"
        save_grid(self.grid, path)
        document = json.loads(path.read_text())
        assert document["version"] == "mpcmp-grid/1"
        assert all(isinstance(v, str) for v in document["eta_values"])
        assert len(document["eta_values"]) == 6

    def test_unknown_version_rejected(self, tmp_path):
        """Test that an unknown format version is rejected."""
        path = tmp_path / "grid.json"
        save_grid(self.grid, path)
        document = json.loads(path.read_text())
        document["version"] = "mpcmp-grid/99"
        path.write_text(json.dumps(document))

        with pytest.raises(GridFormatError, match="unsupported grid format"):
            load_grid(path)

    def test_malformed_document(self, tmp_path):
        """Test that malformed JSON is rejected."""
        path = tmp_path / "grid.json"
        path.write_text('{"version": "mpcmp-grid/1", "rows": 1}')
        with pytest.raises(GridFormatError):
            load_grid(path)

    def test_shape_mismatch(self, tmp_path):
        """Test that a value count that disagrees with the shape is rejected."""
        path = tmp_path / "grid.json"
        save_grid(self.grid, path)
        document = json.loads(path.read_text())
        document["eta_values"] = document["eta_values"][:-1]
        path.write_text(json.dumps(document))
        with pytest.raises(GridFormatError):
            load_grid(path)

    def test_missing_file(self, tmp_path):
        """Test that a missing grid file is a format error."""
        with pytest.raises(GridFormatError):
            load_grid(tmp_path / "absent.json")
