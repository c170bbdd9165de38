#!/usr/bin/env python3
"""
Command line entry point.

    python -m epf ingest --panel data.csv
    python -m epf hpo
    python -m epf forecast --runs 4
    python -m epf bench
    python -m epf eval
    python -m epf export-plots
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from evaluate.evaluator import ForecastEvaluator
from visualize.results import ForecastVisualizer

from .cdftools import write_quantile_forecasts
from .config import ForecastConfig, load_config
from .dataio import PricePanel, load_panel, load_panel_cache, make_schedule, save_panel_cache, write_panel_csv
from .errors import ConfigError, EpfError
from .harness import RunManifest, build_manifest, hpo_search, prepare_hpo_data, run_benchmarks, run_forecasts
from .synthetic import generate_panel

logger = logging.getLogger(__name__)

PANEL_CACHE = "panel.npz"
MANIFEST = "manifest.yaml"
FORECAST_DIR = "forecasts"
REPORT_DIR = "report"


def setup_logging(config: ForecastConfig):
    handlers = [logging.StreamHandler()]
    if config.log_file:
        handlers.append(logging.FileHandler(config.log_file))
    logging.basicConfig(
        level=getattr(logging, str(config.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def read_panel(config: ForecastConfig, panel_arg: Optional[str] = None) -> PricePanel:
    """Panel from an explicit file, the configured CSV or cache, or the ingest cache."""
    candidates = [panel_arg, config.panel_cache, str(config.output_path(PANEL_CACHE)), config.panel_csv]
    for candidate in candidates:
        if not candidate:
            continue
        path = Path(candidate)
        if path.suffix == ".npz":
            if path.exists() or candidate == panel_arg:
                return load_panel_cache(path)
            continue
        return load_panel(path, config.panel_schema)
    raise ConfigError("No panel available: run 'ingest' first or pass --panel")


def require_schedule_dates(config: ForecastConfig):
    if config.oos_start is None or config.oos_end is None:
        raise ConfigError("oos_start and oos_end must be configured")


def schedule_for(config: ForecastConfig, panel: PricePanel):
    require_schedule_dates(config)
    return make_schedule(
        panel,
        config.train_val_len,
        config.oos_start,
        config.oos_end,
        config.subperiod_bounds,
        calibration_len=config.calibration_len,
    )


def cmd_ingest(config: ForecastConfig, args) -> int:
    if args.synthetic:
        generated = generate_panel(args.days or config.synthetic_days, seed=config.seed)
        panel = generated.panel
        write_panel_csv(panel, config.output_path("synthetic_panel.csv"), config.panel_schema)
        if config.oos_start and config.oos_end:
            schedule = schedule_for(config, panel)
            days = schedule.test_days
            oracle = generated.oracle_quantiles(days, config.hours)
            write_quantile_forecasts(config.output_path(FORECAST_DIR, "oracle.csv"), panel.days[days], config.hours, oracle)
    else:
        source = args.panel or config.panel_csv
        if not source:
            raise ConfigError("ingest needs --panel, panel_csv in the config, or --synthetic")
        panel = load_panel(source, config.panel_schema)

    cache = save_panel_cache(panel, args.cache or config.panel_cache or config.output_path(PANEL_CACHE))
    print(f"Panel: {panel.n_days} days, {panel.days[0]} to {panel.days[-1]}")
    print(f"Data hash: {panel.data_hash()[:16]}")
    print(f"Cache: {cache}")
    return 0


def cmd_hpo(config: ForecastConfig, args) -> int:
    panel = read_panel(config, args.panel)
    require_schedule_dates(config)
    start = panel.index_of(config.oos_start)
    window = range(max(0, start - config.train_val_len), start)
    data = prepare_hpo_data(panel, window, config.hours, config.winsor_proportion)
    results = hpo_search(config.hpo, data, config.seed, config.workers)
    manifest = build_manifest(
        results,
        config.seed,
        panel,
        config.subperiod_bounds,
        config.hpo,
        checkpoint_dir=str(config.output_path("checkpoints")),
    )
    path = manifest.save_yaml(args.manifest or config.output_path(MANIFEST))
    print(f"Run {manifest.run_id}: {len(results)} hour(s) tuned, manifest {path}")
    return 0


def cmd_forecast(config: ForecastConfig, args) -> int:
    panel = read_panel(config, args.panel)
    manifest = RunManifest.from_yaml(args.manifest or config.output_path(MANIFEST))
    if manifest.data_hash != panel.data_hash():
        logger.warning("Panel differs from the one the manifest was tuned on")
    if args.no_checkpoints:
        manifest.checkpoint_dir = None
    schedule = schedule_for(config, panel)
    paths = run_forecasts(
        panel,
        schedule,
        manifest,
        config.output_path(FORECAST_DIR),
        runs=args.runs or config.runs,
        ensembles=config.hpo.ensembles,
        settings=config.rolling,
        workers=config.workers,
    )
    for path in paths:
        print(f"Wrote {path}")
    return 0


def cmd_bench(config: ForecastConfig, args) -> int:
    panel = read_panel(config, args.panel)
    schedule = schedule_for(config, panel)
    paths = run_benchmarks(
        panel,
        schedule,
        config.output_path(FORECAST_DIR),
        hours=config.hours,
        naive_window=config.naive_window,
        bootstrap_draws=config.bootstrap_draws,
        seed=config.seed,
        lear_windows=config.lear_windows,
        n_lambdas=config.n_lambdas,
        lear_folds=config.lear_folds,
        lear_cv_rule=config.lear_cv_rule,
        qr_solver=config.qr_solver,
        workers=config.workers,
    )
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_eval(config: ForecastConfig, args) -> int:
    panel = read_panel(config, args.panel)
    evaluation = config.evaluation
    if config.workers:
        evaluation.workers = config.workers
    evaluator = ForecastEvaluator(evaluation)
    source = args.forecasts or config.output_path(FORECAST_DIR)
    evaluator.run_evaluation(panel, source, str(config.output_path(REPORT_DIR)), config.subperiods())
    return 0


def cmd_export_plots(config: ForecastConfig, args) -> int:
    visualizer = ForecastVisualizer(args.report or config.output_path(REPORT_DIR), args.plot_output)
    files = visualizer.generate_all_visualizations(figures=not args.no_figures)
    for path in files:
        print(f"Wrote {path}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "hpo": cmd_hpo,
    "forecast": cmd_forecast,
    "bench": cmd_bench,
    "eval": cmd_eval,
    "export-plots": cmd_export_plots,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epf", description="Probabilistic electricity price forecasting")
    parser.add_argument("--config", "-c", help="YAML configuration file")
    parser.add_argument("--preset", choices=["de", "synthetic"], help="Built-in configuration (default: de)")
    parser.add_argument("--workers", "-w", type=int, help="Worker processes")
    parser.add_argument("--seed", type=int, help="Base seed")
    parser.add_argument("--output", "-o", help="Output directory")
    parser.add_argument("--log-level", help="Logging level")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    ingest = subparsers.add_parser("ingest", help="Validate a panel CSV and write the cache")
    ingest.add_argument("--panel", help="Panel CSV")
    ingest.add_argument("--synthetic", action="store_true", help="Generate a synthetic Gaussian panel")
    ingest.add_argument("--days", type=int, help="Synthetic panel length")
    ingest.add_argument("--cache", help="Cache file to write")

    hpo = subparsers.add_parser("hpo", help="Select a network configuration per hour")
    hpo.add_argument("--panel", help="Panel CSV or cache")
    hpo.add_argument("--manifest", help="Manifest file to write")

    forecast = subparsers.add_parser("forecast", help="Rolling network forecasts")
    forecast.add_argument("--panel", help="Panel CSV or cache")
    forecast.add_argument("--manifest", help="Manifest written by hpo")
    forecast.add_argument("--runs", type=int, help="Number of independent runs")
    forecast.add_argument("--no-checkpoints", action="store_true", help="Disable checkpointing and resume")

    bench = subparsers.add_parser("bench", help="Naive, LEAR-QRA and LEAR-QRM benchmark forecasts")
    bench.add_argument("--panel", help="Panel CSV or cache")

    ev = subparsers.add_parser("eval", help="CRPS and Diebold-Mariano tables")
    ev.add_argument("--panel", help="Panel CSV or cache")
    ev.add_argument("--forecasts", help="Forecast directory (default: <output>/forecasts)")

    plots = subparsers.add_parser("export-plots", help="Long-format tables and figures from a report")
    plots.add_argument("--report", help="Report directory (default: <output>/report)")
    plots.add_argument("--output", dest="plot_output", help="Export directory")
    plots.add_argument("--no-figures", action="store_true", help="Only write CSV exports")
    return parser


def main(argv=None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 0
    try:
        config = load_config(args.config, args.preset)
        overrides = {
            "workers": args.workers,
            "seed": args.seed,
            "log_level": args.log_level,
            "output_directory": args.output,
        }
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        setup_logging(config)
        return COMMANDS[args.command](config, args)
    except EpfError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 0


if __name__ == "__main__":
    sys.exit(main())
