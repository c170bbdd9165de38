"""
Visualize package for forecast evaluation results.

Turns evaluation report tables into long-format CSV exports, per-hour CRPS
curves, Diebold-Mariano p-value heatmaps and quantile fan charts.
"""

from .results import ForecastVisualizer, create_fan_chart

__all__ = [
    "ForecastVisualizer",
    "create_fan_chart",
]
