import itertools

import numpy as np
import pandas as pd
import pytest
from scipy.stats import norm

from epf import benchmarks
from epf.benchmarks import (
    PointForecastSet,
    lasso_alpha_grid,
    lasso_fit,
    lear_fit,
    lear_point_forecasts,
    naive_1n_forecast,
    naive_b_forecast,
    naive_errors,
    naive_point,
    naive_points,
    qr_objective,
    qra_forecast,
    qrm_forecast,
    quantile_regression_fit,
)
from epf.cdftools import LEVELS_99, check_monotone
from epf.dataio import HOURS, PricePanel
from epf.errors import DataError, InsufficientHistoryError
from evaluate.metrics import crps


def _calendar_panel(n_days=60):
    """Panel starting on a Monday whose price encodes day and hour as 100*d + h."""
    days = pd.date_range("2020-01-06", periods=n_days, freq="D").to_numpy(dtype="datetime64[D]")
    prices = 100.0 * np.arange(n_days)[:, None] + np.arange(1, HOURS + 1)[None, :]
    ones = np.ones(n_days)
    return PricePanel(
        days=days,
        prices=prices,
        load_fc=np.ones((n_days, HOURS)),
        res_fc=np.ones((n_days, HOURS)),
        eua=ones,
        coal=ones,
        gas=ones,
        oil=ones,
    )


def _point_set(n_days, values, windows=(56, 84)):
    days = np.arange(n_days)
    dates = np.datetime64("2020-01-01") + days
    return PointForecastSet(days=days, dates=dates, hours=(1,), windows=tuple(windows), values=values)


def _lasso_objective(X, y, coef, intercept, alpha):
    r = y - X @ coef - intercept
    return r @ r / (2 * len(y)) + alpha * np.abs(coef).sum()


def _brute_force_lasso(X, y, alpha):
    """Minimum over every support and sign pattern whose stationary point keeps its signs."""
    n, p = X.shape
    Xc, yc = X - X.mean(axis=0), y - y.mean()
    best = yc @ yc / (2 * n)
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=p):
        signs = np.array(signs)
        S = np.flatnonzero(signs)
        if S.size == 0:
            continue
        coef_s = np.linalg.solve(Xc[:, S].T @ Xc[:, S], Xc[:, S].T @ yc - n * alpha * signs[S])
        if np.any(np.sign(coef_s) != signs[S]):
            continue
        coef = np.zeros(p)
        coef[S] = coef_s
        best = min(best, _lasso_objective(Xc, yc, coef, 0.0, alpha))
    return best


class TestNaive:
    def test_weekly_lag_on_monday_and_weekend(self):
        panel = _calendar_panel()
        monday, tuesday, saturday, sunday = 14, 15, 19, 20
        assert naive_point(panel, monday, 3) == panel.prices[monday - 7, 2]
        assert naive_point(panel, tuesday, 3) == panel.prices[tuesday - 1, 2]
        assert naive_point(panel, saturday, 24) == panel.prices[saturday - 7, 23]
        assert naive_point(panel, sunday, 1) == panel.prices[sunday - 7, 0]

    def test_points_need_a_week_of_history(self):
        with pytest.raises(InsufficientHistoryError):
            naive_points(_calendar_panel(), [3])

    def test_errors_skip_days_without_history(self):
        panel = _calendar_panel()
        errors = naive_errors(panel, 20, window=182)
        assert errors.shape == (13, HOURS)
        np.testing.assert_array_equal(errors[0], panel.prices[7] - panel.prices[0])

    def test_bootstrap_band_follows_error_sample(self, monkeypatch):
        panel = _calendar_panel()
        errors = np.where(np.arange(40)[:, None] % 2 == 0, -1.0, 1.0) * np.ones((40, HOURS))
        monkeypatch.setattr(benchmarks, "naive_errors", lambda panel, t, window: errors)
        quantiles = naive_b_forecast(panel, 45, 5, draws=5000, seed=1)
        point = naive_point(panel, 45, 5)
        assert quantiles.shape == (99,)
        assert quantiles[24] == pytest.approx(point - 1.0)
        assert quantiles[74] == pytest.approx(point + 1.0)

    def test_bootstrap_is_seeded(self, panel):
        a = naive_b_forecast(panel, 200, 7, window=100, seed=5)
        b = naive_b_forecast(panel, 200, 7, window=100, seed=5)
        np.testing.assert_array_equal(a, b)
        assert check_monotone(a)

    def test_gaussian_band_is_centred_on_point(self, panel):
        quantiles = naive_1n_forecast(panel, 220, 9, window=182)
        assert quantiles[49] == pytest.approx(naive_point(panel, 220, 9))
        sigma = np.std(naive_errors(panel, 220, 182)[:, 8], ddof=1)
        assert quantiles[98] - quantiles[49] == pytest.approx(sigma * norm.ppf(0.99))

    def test_gaussian_band_needs_full_window(self, panel):
        with pytest.raises(InsufficientHistoryError):
            naive_1n_forecast(panel, 100, 1, window=182)


class TestLasso:
    def test_recovers_sparse_coefficients(self, rng):
        X = rng.normal(size=(300, 5))
        y = 2.0 * X[:, 0] - 3.0 * X[:, 1] + rng.normal(0.0, 0.01, 300)
        fit = lasso_fit(X, y, alpha=1e-4)
        np.testing.assert_allclose(fit.coef, [2.0, -3.0, 0.0, 0.0, 0.0], atol=0.1)

    def test_duplicate_column_keeps_predictions(self, rng):
        X = rng.normal(size=(100, 3))
        y = X @ np.array([1.0, -0.5, 0.0]) + rng.normal(0.0, 0.1, 100)
        single = lasso_fit(X, y, alpha=0.05, tol=1e-14)
        doubled = lasso_fit(np.column_stack([X, X[:, 0]]), y, alpha=0.05, tol=1e-14)
        np.testing.assert_allclose(
            doubled.predict(np.column_stack([X, X[:, 0]])), single.predict(X), atol=1e-6
        )

    def test_cross_validated_fit(self, rng):
        X = rng.normal(size=(140, 6))
        y = 1.5 * X[:, 2] + rng.normal(0.0, 0.1, 140)
        fit = lear_fit(X, y, n_lambdas=20, folds=7)
        assert fit.alpha in fit.alphas
        assert fit.cv_errors.shape == (20,)
        assert abs(fit.coef[2] - 1.5) < 0.1

    def test_constant_target(self, rng):
        fit = lear_fit(rng.normal(size=(30, 3)), np.full(30, 4.0))
        np.testing.assert_array_equal(fit.coef, 0.0)
        assert fit.predict(np.ones((1, 3)))[0] == 4.0

    def test_too_few_rows(self, rng):
        with pytest.raises(DataError):
            lear_fit(rng.normal(size=(10, 3)), rng.normal(size=10), folds=7)

    def test_unknown_rule(self, rng):
        with pytest.raises(DataError):
            lear_fit(rng.normal(size=(40, 3)), rng.normal(size=40), rule="aic")

    def test_one_standard_error_rule_shrinks_more(self, rng):
        X = rng.normal(size=(300, 10))
        y = X[:, 0] - X[:, 1] + rng.normal(0.0, 1.0, 300)
        assert lear_fit(X, y, n_lambdas=30, rule="1se").alpha >= lear_fit(X, y, n_lambdas=30).alpha

    def test_sparse_support_recovery(self):
        recovered = 0
        for problem in range(50):
            rng = np.random.default_rng(problem)
            X = rng.normal(size=(1000, 20))
            active = rng.choice(20, size=5, replace=False)
            beta = np.zeros(20)
            beta[active] = rng.uniform(1.0, 2.0, 5) * rng.choice([-1.0, 1.0], 5)
            y = X @ beta + rng.normal(0.0, 1.0, 1000)
            support = np.flatnonzero(lear_fit(X, y, rule="1se").coef)
            spurious = np.setdiff1d(support, active).size
            if set(active) <= set(support) and spurious <= 1:
                recovered += 1
        assert recovered >= 45

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_matches_exhaustive_sign_search(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(60, 5))
        y = X @ np.array([1.5, 0.0, -0.7, 0.0, 0.2]) + rng.normal(0.0, 0.5, 60)
        for alpha in lasso_alpha_grid(X, y, 6)[1:]:
            fit = lasso_fit(X, y, alpha, tol=1e-14)
            brute = _brute_force_lasso(X, y, alpha)
            assert _lasso_objective(X, y, fit.coef, fit.intercept, alpha) == pytest.approx(brute, rel=1e-8)


class TestLearPointForecasts:
    def test_rolling_points(self, synthetic):
        panel = synthetic.panel
        days = [200, 201]
        points = lear_point_forecasts(panel, days, windows=(56,), hours=(1, 12), n_lambdas=10, workers=1)
        assert points.values.shape == (2, 2, 1)
        assert np.all(np.isfinite(points.values))
        truth = panel.prices[np.ix_(days, [0, 11])]
        assert np.all(np.abs(points.values[:, :, 0] - truth) < 30.0)

    def test_window_before_panel_start(self, panel):
        with pytest.raises(InsufficientHistoryError):
            lear_point_forecasts(panel, [50], windows=(56,), hours=(1,), workers=1)

    def test_frame_and_csv(self, tmp_path):
        points = _point_set(3, np.arange(6.0).reshape(3, 1, 2))
        path = points.write_csv(tmp_path / "lear.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["date", "hour", "p56", "p84"]
        assert frame["p84"].tolist() == [1.0, 3.0, 5.0]

    def test_invalid_sets(self):
        with pytest.raises(DataError):
            _point_set(3, np.zeros((3, 1, 2)), windows=(56, 56))
        with pytest.raises(DataError):
            _point_set(3, np.zeros((3, 2, 2)))
        with pytest.raises(DataError):
            _point_set(3, np.zeros((3, 1, 2))).rows_for([5])


class TestQuantileRegression:
    def test_intercept_only_hits_empirical_quantile(self, rng):
        y = rng.standard_t(3, size=1000)
        X = np.ones((1000, 1))
        residuals = y[None, :] - np.sort(y)[:, None]
        for alpha in LEVELS_99:
            beta = quantile_regression_fit(X, y, alpha)
            brute = np.min(np.sum(residuals * (alpha - (residuals < 0)), axis=1))
            assert qr_objective(X, y, beta, alpha) <= brute * (1 + 1e-8), alpha

    @pytest.mark.parametrize("alpha", [0.01, 0.99])
    @pytest.mark.parametrize("seed", range(20))
    def test_qra_design_at_extreme_levels(self, alpha, seed):
        rng = np.random.default_rng(seed)
        truth = rng.normal(50.0, 10.0, 182)
        forecasts = [truth + s * rng.standard_t(3, 182) for s in (1.0, 2.0, 3.0, 4.0)]
        X = np.column_stack([np.ones(182), *forecasts])
        y = truth + 2.0 * rng.standard_t(3, 182)
        exact = qr_objective(X, y, quantile_regression_fit(X, y, alpha), alpha)
        lp = qr_objective(X, y, quantile_regression_fit(X, y, alpha, solver="highs"), alpha)
        assert exact <= lp * (1 + 1e-8)

    def test_matches_linear_program(self, rng):
        x = rng.normal(size=80)
        X = np.column_stack([np.ones(80), x])
        y = 1.0 + 2.0 * x + rng.standard_t(4, size=80)
        for alpha in (0.1, 0.5, 0.95):
            irls = qr_objective(X, y, quantile_regression_fit(X, y, alpha), alpha)
            lp = qr_objective(X, y, quantile_regression_fit(X, y, alpha, solver="highs"), alpha)
            assert irls <= lp * (1 + 1e-6)

    def test_tied_targets(self, rng):
        x = rng.integers(0, 5, 120).astype(float)
        X = np.column_stack([np.ones(120), x])
        y = x + rng.integers(0, 3, 120)
        for alpha in (0.25, 0.5, 0.75):
            exact = qr_objective(X, y, quantile_regression_fit(X, y, alpha), alpha)
            lp = qr_objective(X, y, quantile_regression_fit(X, y, alpha, solver="highs"), alpha)
            assert exact <= lp * (1 + 1e-8)

    def test_invalid_inputs(self, rng):
        X = rng.normal(size=(5, 5))
        with pytest.raises(DataError):
            quantile_regression_fit(X, rng.normal(size=5), 0.5)
        with pytest.raises(DataError):
            quantile_regression_fit(rng.normal(size=(10, 2)), rng.normal(size=10), 1.0)
        with pytest.raises(DataError):
            quantile_regression_fit(rng.normal(size=(10, 2)), rng.normal(size=10), 0.5, solver="simplex")


class TestQraQrm:
    def _setup(self, rng, n_days, noise=0.1):
        mean = rng.normal(50.0, 5.0, n_days)
        prices = np.zeros((n_days, HOURS))
        prices[:, 0] = mean + rng.standard_normal(n_days)
        values = mean[:, None, None] + rng.normal(0.0, noise, size=(n_days, 1, 2))
        return mean, prices, _point_set(n_days, values)

    def test_shapes_and_order(self, rng):
        _, prices, points = self._setup(rng, 200)
        days = np.arange(190, 200)
        levels = (0.1, 0.5, 0.9)
        qra = qra_forecast(points, prices, days, calib=182, levels=levels, workers=1)
        qrm = qrm_forecast(points, prices, days, calib=182, levels=levels, workers=1)
        for quantiles in (qra, qrm):
            assert quantiles.shape == (10, 1, 3)
            assert check_monotone(quantiles)

    def test_calibration_window_must_be_covered(self, rng):
        _, prices, points = self._setup(rng, 100)
        with pytest.raises(DataError):
            qra_forecast(points, prices, [90], calib=182, workers=1)

    @pytest.mark.slow
    def test_gaussian_errors_close_to_oracle(self, rng):
        mean, prices, points = self._setup(rng, 282)
        days = np.arange(182, 282)
        qra = qra_forecast(points, prices, days, calib=182, workers=1)[:, 0, :]
        oracle = mean[days, None] + norm.ppf(LEVELS_99)[None, :]
        realized = prices[days, 0]
        assert np.mean(crps(qra, realized)) <= 1.1 * np.mean(crps(oracle, realized))


class TestFuturePrices:
    T = 230

    @pytest.fixture(scope="class")
    def fuzzed(self, panel):
        prices = panel.prices.copy()
        prices[self.T :] = np.random.default_rng(7).normal(500.0, 300.0, size=prices[self.T :].shape)
        return panel.with_prices(prices)

    def test_naive_bands(self, panel, fuzzed):
        for h in (1, 13, 24):
            np.testing.assert_array_equal(
                naive_b_forecast(fuzzed, self.T, h, seed=3), naive_b_forecast(panel, self.T, h, seed=3)
            )
            np.testing.assert_array_equal(naive_1n_forecast(fuzzed, self.T, h), naive_1n_forecast(panel, self.T, h))

    def test_lear_and_quantile_regression(self, panel, fuzzed):
        days = np.arange(self.T - 30, self.T + 1)
        kwargs = dict(windows=(56, 84), hours=(1, 19), n_lambdas=5, workers=1)
        reference = lear_point_forecasts(panel, days, **kwargs)
        changed = lear_point_forecasts(fuzzed, days, **kwargs)
        np.testing.assert_array_equal(changed.values, reference.values)

        levels = (0.05, 0.5, 0.95)
        for forecast in (qra_forecast, qrm_forecast):
            np.testing.assert_array_equal(
                forecast(changed, fuzzed.prices, [self.T], calib=30, levels=levels, workers=1),
                forecast(reference, panel.prices, [self.T], calib=30, levels=levels, workers=1),
            )
