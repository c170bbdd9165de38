import numpy as np
import pandas as pd
import pytest
from scipy.stats import norm

from epf.cdftools import (
    LEVELS_31,
    LEVELS_99,
    MonotoneCubic,
    QuantileTable,
    cdf_to_quantiles,
    check_monotone,
    ensemble_average,
    fit_cdf,
    repair_probabilities,
    target_indicators,
    unconditional_quantiles,
    write_quantile_forecasts,
)
from epf.errors import DataError


class TestQuantileTable:
    def test_shape_and_monotonicity(self, rng):
        table = unconditional_quantiles(rng.normal(size=(200, 24)))
        assert table.values.shape == (24, 31)
        assert table.k == 31
        assert check_monotone(table.values)

    def test_too_few_observations(self, rng):
        with pytest.raises(DataError):
            unconditional_quantiles(rng.normal(size=(30, 24)))

    def test_target_indicators(self):
        table = QuantileTable(levels=np.array([0.25, 0.5, 0.75]), values=np.tile([1.0, 2.0, 3.0], (24, 1)))
        prices = np.full((2, 24), 2.0)
        prices[1, 5] = 0.5
        indicators = target_indicators(prices, table)
        assert indicators.shape == (2, 24, 3)
        np.testing.assert_array_equal(indicators[0, 0], [0, 1, 1])
        np.testing.assert_array_equal(indicators[1, 5], [1, 1, 1])


class TestMonotoneCubic:
    def test_random_knot_sets_are_monotone(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 20))
            x = np.cumsum(rng.uniform(0.01, 3.0, n))
            y = np.cumsum(rng.exponential(1.0, n) + 1e-6)
            spline = MonotoneCubic(x, y)
            samples = spline(np.linspace(x[0], x[-1], 10_000))
            assert np.min(np.diff(samples)) >= -1e-12
            np.testing.assert_array_equal(spline(x), y)

    def test_collinear_knots_reproduce_the_line(self):
        x = np.array([0.0, 0.5, 2.0, 3.5, 4.0])
        spline = MonotoneCubic(x, 2.0 * x + 1.0)
        grid = np.linspace(0.0, 4.0, 1001)
        np.testing.assert_allclose(spline(grid), 2.0 * grid + 1.0, atol=1e-12)

    def test_steep_step_does_not_overshoot(self):
        x = np.arange(6, dtype=float)
        y = np.array([0.0, 0.01, 0.02, 0.98, 0.99, 1.0])
        samples = MonotoneCubic(x, y)(np.linspace(0.0, 5.0, 5001))
        assert np.all(np.diff(samples) >= -1e-12)
        assert samples.min() >= -1e-12 and samples.max() <= 1.0 + 1e-12

    def test_held_constant_outside_knots(self):
        spline = MonotoneCubic(np.array([0.0, 1.0, 2.0]), np.array([0.1, 0.5, 0.9]))
        assert spline(-5.0) == pytest.approx(0.1)
        assert spline(7.0) == pytest.approx(0.9)

    def test_rejects_non_increasing_knots(self):
        with pytest.raises(DataError):
            MonotoneCubic(np.array([0.0, 1.0, 1.0]), np.array([0.0, 0.5, 1.0]))
        with pytest.raises(DataError):
            MonotoneCubic(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 0.5]))


class TestRepair:
    def test_non_monotone_input_becomes_strictly_increasing(self):
        repaired = repair_probabilities(np.array([0.2, 0.1, 0.4, 0.3, 0.9]))
        assert np.all(np.diff(repaired) > 0)
        assert repaired[0] > 0 and repaired[-1] < 1

    def test_constant_input(self):
        repaired = repair_probabilities(np.full(31, 0.5))
        assert np.all(np.diff(repaired) > 0)

    def test_saturated_input_stays_inside_unit_interval(self):
        repaired = repair_probabilities(np.ones(31))
        assert np.all(np.diff(repaired) > 0)
        assert repaired[-1] < 1.0

    def test_valid_input_unchanged(self):
        raw = np.linspace(0.05, 0.95, 10)
        np.testing.assert_array_equal(repair_probabilities(raw), raw)


class TestCdfToQuantiles:
    def test_self_inversion_of_support(self):
        support = norm.ppf(LEVELS_31)
        quantiles = cdf_to_quantiles(LEVELS_31, support, (-4.0, 4.0), grid_n=400, levels=LEVELS_31)
        resolution = 8.0 / 399
        np.testing.assert_allclose(quantiles, support, atol=resolution)

    def test_identity_distribution(self):
        support = LEVELS_31.copy()
        quantiles = cdf_to_quantiles(support, support, (0.0, 1.0), grid_n=400)
        assert quantiles[LEVELS_99.tolist().index(0.25)] == pytest.approx(0.25, abs=2.5e-3)

    def test_inversion_consistency(self):
        support = norm.ppf(LEVELS_31)
        raw = norm.cdf(0.8 * support)
        anchors = (support[0] - 1.0, support[-1] + 1.0)
        quantiles = cdf_to_quantiles(raw, support, anchors, grid_n=400)
        cdf = fit_cdf(raw, support, anchors)
        np.testing.assert_allclose(cdf(quantiles), LEVELS_99, atol=2.0 / 400)

    def test_noisy_raw_gives_monotone_output(self, rng):
        support = np.sort(rng.normal(size=31))
        for _ in range(50):
            raw = np.clip(LEVELS_31 + rng.normal(0.0, 0.1, 31), 0.0, 1.0)
            quantiles = cdf_to_quantiles(raw, support, (support[0] - 0.5, support[-1] + 0.5))
            assert quantiles.shape == (99,)
            assert check_monotone(quantiles)

    def test_tied_support_is_handled(self):
        support = np.concatenate([np.zeros(10), np.linspace(0.1, 2.0, 21)])
        quantiles = cdf_to_quantiles(LEVELS_31, support, (-1.0, 3.0))
        assert check_monotone(quantiles)

    def test_anchors_inside_support_rejected(self):
        support = np.linspace(-1.0, 1.0, 31)
        with pytest.raises(DataError):
            cdf_to_quantiles(LEVELS_31, support, (-0.5, 2.0))


class TestEnsembleAverage:
    def test_keeps_better_half(self):
        members = [np.full(3, v) for v in (1.0, 2.0, 3.0, 4.0)]
        np.testing.assert_allclose(ensemble_average(members, [0.3, 0.1, 0.2, 0.4]), np.full(3, 2.5))

    def test_odd_size_rounds_up(self):
        members = [np.full(2, v) for v in (1.0, 5.0, 9.0)]
        np.testing.assert_allclose(ensemble_average(members, [0.5, 0.1, 0.9]), np.full(2, 3.0))

    def test_ties_resolved_by_position(self):
        members = [np.full(2, v) for v in (1.0, 2.0, 3.0, 4.0)]
        np.testing.assert_allclose(ensemble_average(members, [0.2, 0.2, 0.2, 0.2]), np.full(2, 1.5))

    def test_mismatched_inputs(self):
        with pytest.raises(DataError):
            ensemble_average([np.zeros(2)], [0.1, 0.2])
        with pytest.raises(DataError):
            ensemble_average([], [])


class TestWriteForecasts:
    def test_long_format(self, tmp_path):
        days = np.array(["2020-01-01", "2020-01-02"], dtype="datetime64[D]")
        quantiles = np.sort(np.random.default_rng(0).normal(size=(2, 3, 99)), axis=-1)
        path = write_quantile_forecasts(tmp_path / "out" / "model.csv", days, [1, 2, 3], quantiles)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["date", "hour", "alpha", "value"]
        assert len(frame) == 2 * 3 * 99
        assert frame["date"].iloc[0] == "2020-01-01"
        assert frame["alpha"].iloc[98] == pytest.approx(0.99)

    def test_refuses_non_monotone(self, tmp_path):
        quantiles = np.zeros((1, 1, 99))
        quantiles[0, 0, 50] = -1.0
        with pytest.raises(DataError):
            write_quantile_forecasts(tmp_path / "bad.csv", ["2020-01-01"], [1], quantiles)
        assert not (tmp_path / "bad.csv").exists()
