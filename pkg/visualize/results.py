"""
Results visualization module for forecast evaluation reports.
Writes plot-ready long-format CSVs and PNG figures from report tables.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from epf.errors import DataError

logger = logging.getLogger(__name__)

DM_COLOR_MAX = 0.1


class ForecastVisualizer:
    """Class for creating exports and figures from an evaluation report directory."""

    def __init__(self, report_dir: Union[str, Path], output_dir: Optional[Union[str, Path]] = None):
        """
        Initialize with a report directory.

        Args:
            report_dir: Directory holding crps_per_hour.csv and the DM tables
            output_dir: Where exports go (report_dir/visualizations if None)
        """
        self.report_dir = Path(report_dir)
        if not (self.report_dir / "crps_per_hour.csv").exists():
            raise DataError(f"No evaluation report found in {self.report_dir}")
        self.output_dir = Path(output_dir) if output_dir else self.report_dir / "visualizations"
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _read(self, name: str, **kwargs) -> Optional[pd.DataFrame]:
        path = self.report_dir / name
        if not path.exists():
            return None
        return pd.read_csv(path, **kwargs)

    def per_hour_long(self) -> pd.DataFrame:
        """Per-hour mean CRPS as (hour, model, crps) rows."""
        wide = self._read("crps_per_hour.csv", index_col="hour")
        return wide.reset_index().melt(id_vars="hour", var_name="model", value_name="crps")

    def dm_daily_long(self) -> Optional[pd.DataFrame]:
        """Daily DM p-values as (tested, reference, p_value, label) rows."""
        wide = self._read("dm_daily.csv", index_col="model", keep_default_na=False, dtype=str)
        if wide is None:
            return None
        long = wide.reset_index().melt(id_vars="model", var_name="reference", value_name="label")
        long = long.rename(columns={"model": "tested"})
        long = long[long["tested"] != long["reference"]].reset_index(drop=True)
        long["p_value"] = pd.to_numeric(long["label"], errors="coerce")
        return long[["tested", "reference", "p_value", "label"]]

    def dm_hourly_long(self) -> Optional[pd.DataFrame]:
        return self._read("dm_hourly.csv", keep_default_na=False, na_values=[""])

    def export_long_tables(self) -> List[Path]:
        """Write every available table in long format."""
        written = []
        tables = {
            "crps_per_hour_long.csv": self.per_hour_long(),
            "dm_daily_long.csv": self.dm_daily_long(),
            "dm_hourly_long.csv": self.dm_hourly_long(),
        }
        for name, table in tables.items():
            if table is None:
                continue
            path = self.output_dir / name
            table.to_csv(path, index=False, float_format="%.10g")
            written.append(path)
        logger.info(f"Exported {len(written)} long-format table(s) to {self.output_dir}")
        return written

    def create_crps_curves(self) -> Path:
        """Line chart of mean CRPS by hour, one line per model."""
        long = self.per_hour_long()
        fig, ax = plt.subplots(figsize=(10, 5))
        for model, group in long.groupby("model", sort=True):
            ax.plot(group["hour"], group["crps"], marker="o", markersize=3, label=model)
        ax.set_xlabel("Hour")
        ax.set_ylabel("Mean CRPS")
        ax.set_xticks(sorted(long["hour"].unique()))
        ax.set_title("CRPS by hour")
        ax.legend(loc="best", fontsize="small")
        ax.grid(alpha=0.3)
        path = self.output_dir / "crps_per_hour.png"
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return path

    def create_dm_heatmap(self) -> Optional[Path]:
        """Heatmap of daily DM p-values; cells above 0.1 and indeterminate cells stay blank."""
        long = self.dm_daily_long()
        if long is None or long.empty:
            logger.warning("No DM table available, skipping heatmap")
            return None
        models = sorted(set(long["tested"]) | set(long["reference"]))
        matrix = long.pivot(index="tested", columns="reference", values="p_value").reindex(index=models, columns=models)
        mask = matrix.isna() | (matrix > DM_COLOR_MAX)

        fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(models), 0.8 + 0.7 * len(models)))
        sns.heatmap(
            matrix,
            mask=mask.to_numpy(),
            vmin=0.0,
            vmax=DM_COLOR_MAX,
            cmap="RdYlGn_r",
            annot=True,
            fmt=".3f",
            linewidths=0.5,
            linecolor="lightgrey",
            cbar_kws={"label": "p-value"},
            ax=ax,
        )
        ax.set_xlabel("Reference model")
        ax.set_ylabel("Tested model")
        ax.set_title("Diebold-Mariano p-values")
        path = self.output_dir / "dm_heatmap.png"
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return path

    def generate_all_visualizations(self, figures: bool = True) -> List[Path]:
        """Export long tables and, optionally, the figures."""
        files = self.export_long_tables()
        if figures:
            files.append(self.create_crps_curves())
            heatmap = self.create_dm_heatmap()
            if heatmap is not None:
                files.append(heatmap)
        return files


def create_fan_chart(
    forecast_csv: Union[str, Path],
    day: str,
    output_path: Union[str, Path],
    realized: Optional[np.ndarray] = None,
    bands: tuple = ((0.01, 0.99), (0.05, 0.95), (0.25, 0.75)),
) -> Path:
    """Plot the hourly quantile bands and median of one forecast day."""
    frame = pd.read_csv(forecast_csv)
    frame = frame[frame["date"] == str(day)]
    if frame.empty:
        raise DataError(f"{forecast_csv}: no forecasts for {day}")
    wide = frame.pivot(index="hour", columns="alpha", values="value")
    wide.columns = np.round(wide.columns.astype(float), 2)

    fig, ax = plt.subplots(figsize=(10, 5))
    palette = sns.color_palette("Blues", len(bands) + 1)
    for i, (low, high) in enumerate(bands):
        ax.fill_between(wide.index, wide[low], wide[high], color=palette[i + 1], alpha=0.6, label=f"{low:.0%}-{high:.0%}")
    ax.plot(wide.index, wide[0.5], color="navy", label="median")
    if realized is not None:
        ax.plot(wide.index, np.asarray(realized, dtype=float), color="black", linestyle="--", marker=".", label="realized")
    ax.set_xlabel("Hour")
    ax.set_ylabel("Price")
    ax.set_title(f"Quantile forecast for {day}")
    ax.legend(loc="best", fontsize="small")
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(output_path, dpi=150)
    plt.close(fig)
    return output_path
