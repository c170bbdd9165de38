from pathlib import Path

import pytest

from epf.config import ForecastConfig, get_config, load_config
from epf.errors import ConfigError
from evaluate.config import DE_SUBPERIODS, EvaluationConfig, Subperiod

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


class TestPresets:
    def test_de(self):
        config = get_config("de")
        assert config.oos_start == "2019-06-27"
        assert config.hours == list(range(1, 25))
        assert [s.name for s in config.subperiods()] == [s.name for s in DE_SUBPERIODS]

    def test_synthetic(self):
        config = get_config("synthetic")
        assert config.hours == [1, 8, 13, 19]
        assert config.hpo.n_candidates == 8
        assert config.output_directory == "synthetic_results"

    def test_presets_are_fresh_copies(self):
        a = get_config("synthetic")
        a.hours.append(24)
        assert get_config("synthetic").hours == [1, 8, 13, 19]

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            get_config("fr")


class TestForecastConfig:
    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="epochs"):
            ForecastConfig.from_dict({"epochs": 10})

    def test_yaml_round_trip(self, tmp_path):
        config = get_config("synthetic")
        config.save_yaml(tmp_path / "config.yaml")
        assert ForecastConfig.from_yaml(tmp_path / "config.yaml") == config

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ForecastConfig.from_yaml(tmp_path / "absent.yaml")

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            ForecastConfig.from_yaml(path)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"hours": [0, 1]},
            {"hours": []},
            {"qr_solver": "simplex"},
            {"lear_cv_rule": "aic"},
            {"winsor_proportion": 0.5},
            {"runs": 0},
            {"lear_windows": [1]},
            {"oos_start": "2020-01-01", "oos_end": "2019-01-01"},
            {"oos_start": "2020-01-01", "oos_end": "2020-12-31", "subperiod_bounds": ["2021-06-01"]},
            {"oos_start": "2020-02-31"},
            {"schema": {"timestamp": "ts"}},
            {"hpo": {"folds": 1}},
            {"evaluation": {"dm_sided": "both"}},
        ],
    )
    def test_validation(self, overrides):
        with pytest.raises(ConfigError):
            ForecastConfig.from_dict(overrides)

    def test_nested_sections_from_dicts(self):
        config = ForecastConfig.from_dict({"hpo": {"n_candidates": 3}, "evaluation": {"per_hour_dm": False}})
        assert config.hpo.n_candidates == 3
        assert config.evaluation.per_hour_dm is False
        assert config.panel_schema.price == "price"
        assert config.rolling.update_epochs == config.update_epochs

    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("EPF_WORKERS", "3")
        monkeypatch.setenv("EPF_SEED", "9")
        monkeypatch.setenv("EPF_OUTPUT_DIR", "/tmp/elsewhere")
        config = load_config(preset="synthetic")
        assert config.workers == 3
        assert config.seed == 9
        assert config.output_directory == "/tmp/elsewhere"

    def test_derived_subperiods(self):
        periods = get_config("synthetic").subperiods()
        assert [(p.name, p.start, p.end) for p in periods] == [
            ("P1", "2016-12-01", "2017-01-19"),
            ("P2", "2017-01-20", "2017-03-10"),
        ]

    def test_no_subperiods_without_dates(self):
        assert ForecastConfig().subperiods() == []

    def test_output_path(self):
        config = ForecastConfig(output_directory="results")
        assert config.output_path("forecasts", "qra.csv") == Path("results") / "forecasts" / "qra.csv"


class TestSampleConfigs:
    def test_forecast_config_loads(self):
        config = ForecastConfig.from_yaml(CONFIG_DIR / "sample_forecast_config.yaml")
        assert config.hpo.n_candidates == 40
        assert len(config.evaluation.subperiods) == 4
        assert config.panel_schema.load_fc == "load_forecast"

    def test_evaluation_config_loads(self):
        config = EvaluationConfig.from_yaml(CONFIG_DIR / "sample_evaluation_config.yaml")
        assert config.dm_sided == "one"
        assert config.subperiods == list(DE_SUBPERIODS)


class TestEvaluationConfig:
    def test_invalid_sidedness(self):
        with pytest.raises(ConfigError):
            EvaluationConfig(dm_sided="left")

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            EvaluationConfig.from_dict({"metric": "crps"})

    def test_subperiod_order(self):
        with pytest.raises(ConfigError):
            Subperiod("bad", "2021-02-01", "2021-01-01")
        period = Subperiod("ok", "2021-01-01", "2021-01-31")
        assert period.contains(["2021-01-15", "2021-02-01"]).tolist() == [True, False]
