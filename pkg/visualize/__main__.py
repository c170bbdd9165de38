#!/usr/bin/env python3
"""
Main entry point for the visualize package.

Creates long-format exports and figures from an evaluation report directory.
"""

import argparse
import logging
import sys
from pathlib import Path

from epf.errors import EpfError

from .results import ForecastVisualizer, create_fan_chart

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description="Visualize forecast evaluation reports")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    export_parser = subparsers.add_parser("export", help="Write long-format tables and figures")
    export_parser.add_argument("report_dir", help="Directory written by the evaluation")
    export_parser.add_argument("--output", "-o", help="Output directory")
    export_parser.add_argument("--no-figures", action="store_true", help="Only write CSV exports")

    fan_parser = subparsers.add_parser("fan", help="Plot the quantile bands of one forecast day")
    fan_parser.add_argument("forecast_csv", help="Quantile forecast file")
    fan_parser.add_argument("day", help="Day to plot (YYYY-MM-DD)")
    fan_parser.add_argument("--output", "-o", default="fan_chart.png", help="PNG file to write")

    args = parser.parse_args()
    if not args.command:
        parser.print_help()
        return

    try:
        if args.command == "export":
            visualizer = ForecastVisualizer(args.report_dir, args.output)
            files = visualizer.generate_all_visualizations(figures=not args.no_figures)
            print(f"Output directory: {visualizer.output_dir}")
            for path in files:
                print(f"  {path.name}")
        elif args.command == "fan":
            if not Path(args.forecast_csv).exists():
                logger.error(f"Forecast file not found: {args.forecast_csv}")
                sys.exit(3)
            print(f"Saved {create_fan_chart(args.forecast_csv, args.day, args.output)}")
    except EpfError as e:
        logger.error(str(e))
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
