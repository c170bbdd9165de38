#!/usr/bin/env python3
"""
Main entry point for the evaluate package.

Scores every quantile forecast file in a directory against a price panel
and writes CRPS and Diebold-Mariano tables.
"""

import argparse
import logging
import sys
from pathlib import Path

from epf.dataio import load_panel, load_panel_cache
from epf.errors import EpfError

from .config import EvaluationConfig
from .evaluator import ForecastEvaluator

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def load_prices(path: str):
    """Panel from a CSV file or an ingest cache."""
    if path.endswith(".npz"):
        return load_panel_cache(path)
    return load_panel(path)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description="Evaluate probabilistic price forecasts with CRPS and DM tests")
    parser.add_argument("forecast_dir", help="Directory (or single file) of quantile forecast CSVs")
    parser.add_argument("--panel", "-p", required=True, help="Panel CSV or ingest cache with realized prices")
    parser.add_argument("--config", "-c", help="Evaluation YAML configuration")
    parser.add_argument("--output", "-o", help="Report directory")
    parser.add_argument("--sided", choices=["one", "two"], help="DM test sidedness")
    parser.add_argument("--verbose", "-v", action="store_true", help="Print the full text report")
    args = parser.parse_args()

    if not Path(args.forecast_dir).exists():
        logger.error(f"Forecast path not found: {args.forecast_dir}")
        sys.exit(3)

    try:
        config = EvaluationConfig.from_yaml(args.config) if args.config else EvaluationConfig.from_env()
        if args.sided:
            config.dm_sided = args.sided
        if args.verbose:
            config.verbose_output = True
        evaluator = ForecastEvaluator(config)
        evaluator.run_evaluation(load_prices(args.panel), args.forecast_dir, args.output)
    except EpfError as e:
        logger.error(str(e))
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        logger.info("Evaluation interrupted by user")
        sys.exit(0)


if __name__ == "__main__":
    main()
