import os

import pandas as pd
import pytest
import yaml

from epf.__main__ import main
from epf.dataio import load_panel_cache

SMALL_RUN = {
    "synthetic_days": 400,
    "train_val_len": 200,
    "oos_start": "2015-12-01",
    "oos_end": "2016-01-31",
    "subperiod_bounds": ["2016-01-01"],
    "calibration_len": 30,
    "hours": [1, 13],
    "hpo": {
        "hidden_size": [4, 8],
        "batch_sizes": [16],
        "n_candidates": 2,
        "folds": 2,
        "layers": 1,
        "ensembles": 2,
        "max_epochs": 5,
        "patience": 2,
    },
    "update_epochs": 2,
    "checkpoint_every": 10,
    "naive_window": 100,
    "bootstrap_draws": 200,
    "lear_windows": [56, 84],
    "n_lambdas": 5,
    "workers": 1,
}


@pytest.fixture
def ingested(tmp_path):
    output = tmp_path / "out"
    assert main(["--preset", "synthetic", "-o", str(output), "ingest", "--synthetic"]) == 0
    return output


def _preset(output, *command):
    return main(["--preset", "synthetic", "-o", str(output), *command])


class TestIngest:
    def test_synthetic_outputs(self, ingested):
        assert (ingested / "synthetic_panel.csv").exists()
        oracle = pd.read_csv(ingested / "forecasts" / "oracle.csv")
        assert sorted(oracle["hour"].unique()) == [1, 8, 13, 19]
        assert oracle["date"].min() == "2016-12-01" and oracle["date"].max() == "2017-03-10"
        panel = load_panel_cache(ingested / "panel.npz")
        assert panel.n_days == 800

    def test_csv_ingest(self, ingested, tmp_path):
        cache = tmp_path / "copy.npz"
        assert _preset(ingested, "ingest", "--panel", str(ingested / "synthetic_panel.csv"), "--cache", str(cache)) == 0
        assert load_panel_cache(cache).data_hash() == load_panel_cache(ingested / "panel.npz").data_hash()

    def test_bad_panel_is_a_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        pd.DataFrame({"date": ["2021-01-01"], "hour": [1], "price": [3.0]}).to_csv(bad, index=False)
        assert main(["-o", str(tmp_path / "out"), "ingest", "--panel", str(bad)]) == 3

    def test_ingest_needs_a_source(self, tmp_path):
        assert main(["-o", str(tmp_path / "out"), "ingest"]) == 2


class TestCommands:
    def test_eval_and_export(self, ingested):
        frame = pd.read_csv(ingested / "forecasts" / "oracle.csv")
        frame.assign(value=frame["value"] + 5.0).to_csv(ingested / "forecasts" / "shifted.csv", index=False)
        assert _preset(ingested, "eval") == 0
        report = ingested / "report"
        assert "MEAN CRPS" in (report / "report.txt").read_text()
        crps = pd.read_csv(report / "crps.csv", index_col="model")
        assert list(crps.columns) == ["P1", "P2", "overall"]
        assert crps.loc["oracle", "overall"] < crps.loc["shifted", "overall"]

        assert _preset(ingested, "export-plots", "--no-figures") == 0
        assert (report / "visualizations" / "dm_daily_long.csv").exists()

    def test_forecast_without_manifest(self, ingested):
        assert _preset(ingested, "forecast") == 2

    def test_export_without_report(self, ingested):
        assert _preset(ingested, "export-plots") == 3

    def test_missing_config_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.yaml"), "ingest", "--synthetic"]) == 2

    def test_no_command(self):
        assert main([]) == 0


@pytest.mark.slow
def test_full_pipeline(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text(yaml.safe_dump({**SMALL_RUN, "output_directory": str(tmp_path / "out")}))
    out = tmp_path / "out"
    for command in (["ingest", "--synthetic"], ["hpo"], ["forecast", "--runs", "2"], ["bench"], ["eval"], ["export-plots"]):
        assert main(["--config", str(config), *command]) == 0, command

    assert (out / "manifest.yaml").exists()
    crps = pd.read_csv(out / "report" / "crps.csv", index_col="model")
    assert {"distrnn_run", "distrnn_avg", "naive_b", "naive_1n", "qra", "qrm", "oracle"} <= set(crps.index)
    assert crps.loc["oracle", "overall"] < crps.loc["distrnn_run", "overall"]
    assert (out / "report" / "visualizations" / "dm_heatmap.png").exists()


@pytest.mark.slow
def test_synthetic_experiment_accuracy_and_reproducibility(tmp_path):
    workers = str(min(8, os.cpu_count() or 1))
    outputs = [tmp_path / "first", tmp_path / "second"]
    for out in outputs:
        for command in (["ingest", "--synthetic"], ["hpo"], ["forecast"], ["bench"], ["eval"]):
            assert main(["--preset", "synthetic", "-o", str(out), "-w", workers, *command]) == 0, command

    crps = pd.read_csv(outputs[0] / "report" / "crps.csv", index_col="model")["overall"]
    assert crps["distrnn_run"] <= 0.9 * crps["naive_b"]
    assert crps["distrnn_run"] <= 1.3 * crps["oracle"]

    first, second = outputs
    files = sorted(p.relative_to(first) for sub in ("forecasts", "report") for p in (first / sub).rglob("*") if p.is_file())
    assert files
    for relative in files:
        assert (first / relative).read_bytes() == (second / relative).read_bytes(), relative
