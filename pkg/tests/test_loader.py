import numpy as np
import pandas as pd
import pytest

from epf.cdftools import LEVELS_99, write_quantile_forecasts
from epf.errors import DataError, SchemaError
from evaluate.loader import (
    ForecastLoader,
    ForecastSet,
    combine_forecasts,
    common_index,
    group_runs,
    load_forecast_file,
)

RUN_PATTERN = r"^(?P<model>.+)_run(?P<run>\d+)$"


def _quantiles(rng, n_days=3, n_hours=2, shift=0.0):
    return np.sort(rng.normal(size=(n_days, n_hours, 99)), axis=-1) + shift


def _dates(n_days, start="2021-03-01"):
    return np.datetime64(start) + np.arange(n_days)


def _write(path, rng, n_days=3, hours=(1, 2), start="2021-03-01", shift=0.0):
    quantiles = _quantiles(rng, n_days, len(hours), shift)
    write_quantile_forecasts(path, _dates(n_days, start), hours, quantiles)
    return quantiles


class TestLoadForecastFile:
    def test_round_trip(self, tmp_path, rng):
        quantiles = _write(tmp_path / "model.csv", rng)
        forecast = load_forecast_file(tmp_path / "model.csv")
        assert forecast.model == "model"
        assert forecast.hours == (1, 2)
        np.testing.assert_array_equal(forecast.dates, _dates(3))
        np.testing.assert_allclose(forecast.values, quantiles, rtol=1e-11)

    def test_row_order_does_not_matter(self, tmp_path, rng):
        quantiles = _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.sample(frac=1.0, random_state=0).to_csv(tmp_path / "shuffled.csv", index=False)
        np.testing.assert_allclose(load_forecast_file(tmp_path / "shuffled.csv").values, quantiles, rtol=1e-11)

    def test_missing_column(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        pd.read_csv(tmp_path / "model.csv").drop(columns=["alpha"]).to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(SchemaError):
            load_forecast_file(tmp_path / "model.csv")

    def test_non_monotone_quantiles(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.loc[10, "value"] = frame.loc[10, "value"] + 100.0
        frame.to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="decrease"):
            load_forecast_file(tmp_path / "model.csv")

    def test_monotone_tolerance(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.loc[11, "value"] = frame.loc[10, "value"] - 1e-9
        frame.to_csv(tmp_path / "model.csv", index=False)
        assert load_forecast_file(tmp_path / "model.csv", monotone_tolerance=1e-6).values.shape == (3, 2, 99)

    def test_missing_level(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.drop(index=[5]).to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="missing levels"):
            load_forecast_file(tmp_path / "model.csv")

    def test_unexpected_level(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.loc[0, "alpha"] = 0.005
        frame.to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="unexpected levels"):
            load_forecast_file(tmp_path / "model.csv")

    def test_duplicated_rows(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        pd.concat([frame, frame.iloc[[3]]]).to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="duplicated"):
            load_forecast_file(tmp_path / "model.csv")

    def test_incomplete_grid(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        drop = (frame["date"] == "2021-03-02") & (frame["hour"] == 2)
        frame[~drop].to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="incomplete"):
            load_forecast_file(tmp_path / "model.csv")

    def test_bad_date(self, tmp_path, rng):
        _write(tmp_path / "model.csv", rng)
        frame = pd.read_csv(tmp_path / "model.csv")
        frame.loc[7, "date"] = "2021-13-40"
        frame.to_csv(tmp_path / "model.csv", index=False)
        with pytest.raises(DataError, match="Row 9"):
            load_forecast_file(tmp_path / "model.csv")


class TestForecastLoader:
    def test_loads_directory_and_skips_other_csvs(self, tmp_path, rng):
        _write(tmp_path / "a.csv", rng)
        _write(tmp_path / "b.csv", rng)
        pd.DataFrame({"date": ["2021-03-01"], "hour": [1], "p56": [3.0]}).to_csv(tmp_path / "lear_points.csv", index=False)
        forecasts = ForecastLoader(tmp_path).load_and_validate()
        assert sorted(forecasts) == ["a", "b"]

    def test_model_filter(self, tmp_path, rng):
        _write(tmp_path / "a.csv", rng)
        _write(tmp_path / "b.csv", rng)
        assert sorted(ForecastLoader(tmp_path).load_and_validate(["b"])) == ["b"]
        with pytest.raises(DataError, match="not found"):
            ForecastLoader(tmp_path).load_and_validate(["c"])

    def test_collects_failures(self, tmp_path, rng):
        _write(tmp_path / "a.csv", rng)
        _write(tmp_path / "b.csv", rng)
        frame = pd.read_csv(tmp_path / "b.csv")
        frame.drop(index=[0]).to_csv(tmp_path / "b.csv", index=False)
        loader = ForecastLoader(tmp_path)
        with pytest.raises(DataError, match="1 forecast file"):
            loader.load_and_validate()
        assert len(loader.validation_errors) == 1
        assert "b.csv" in loader.validation_errors[0]

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DataError):
            ForecastLoader(tmp_path).load_and_validate()


class TestCombination:
    def test_combine_averages_quantiles(self, rng):
        a = ForecastSet("a", _dates(3), (1, 2), _quantiles(rng))
        b = ForecastSet("b", _dates(3), (1, 2), _quantiles(rng))
        combined = combine_forecasts([a, b], "avg")
        np.testing.assert_allclose(combined.values, (a.values + b.values) / 2)
        assert combined.model == "avg"

    def test_combine_needs_identical_index(self, rng):
        a = ForecastSet("a", _dates(3), (1, 2), _quantiles(rng))
        b = ForecastSet("b", _dates(3, "2021-03-02"), (1, 2), _quantiles(rng))
        with pytest.raises(DataError):
            combine_forecasts([a, b], "avg")

    def test_group_runs_orders_by_run_number(self, rng):
        forecasts = {
            name: ForecastSet(name, _dates(3), (1,), _quantiles(rng, n_hours=1))
            for name in ("distrnn_run10", "distrnn_run2", "qra", "distrnn_run0")
        }
        groups = group_runs(forecasts, RUN_PATTERN)
        assert list(groups) == ["distrnn"]
        assert [f.model for f in groups["distrnn"]] == ["distrnn_run0", "distrnn_run2", "distrnn_run10"]

    def test_common_index_and_restrict(self, rng):
        a = ForecastSet("a", _dates(5), (1, 2, 3), _quantiles(rng, 5, 3))
        b = ForecastSet("b", _dates(4, "2021-03-02"), (2, 3), _quantiles(rng, 4, 2))
        dates, hours = common_index([a, b])
        np.testing.assert_array_equal(dates, _dates(4, "2021-03-02"))
        assert hours == (2, 3)
        restricted = a.restrict(dates, hours)
        np.testing.assert_array_equal(restricted.values, a.values[1:5, 1:3])

    def test_disjoint_forecasts(self, rng):
        a = ForecastSet("a", _dates(2), (1,), _quantiles(rng, 2, 1))
        b = ForecastSet("b", _dates(2, "2022-01-01"), (1,), _quantiles(rng, 2, 1))
        with pytest.raises(DataError):
            common_index([a, b])

    def test_levels_default(self, rng):
        forecast = ForecastSet("a", _dates(1), (1,), _quantiles(rng, 1, 1))
        np.testing.assert_array_equal(forecast.levels, LEVELS_99)
