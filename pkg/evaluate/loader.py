"""
Loading, validation and combination of quantile forecast files, and the evaluation report.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from epf.cdftools import LEVELS_99, check_monotone
from epf.errors import DataError, SchemaError

logger = logging.getLogger(__name__)

FORECAST_COLUMNS = ("date", "hour", "alpha", "value")


@dataclass(frozen=True, eq=False)
class ForecastSet:
    """Quantile forecasts of one model, days x hours x levels."""

    model: str
    dates: np.ndarray
    hours: Tuple[int, ...]
    values: np.ndarray
    levels: np.ndarray = LEVELS_99

    def __post_init__(self):
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[D]"))
        object.__setattr__(self, "hours", tuple(int(h) for h in self.hours))
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=float))
        values = np.asarray(self.values, dtype=float)
        expected = (self.dates.size, len(self.hours), self.levels.size)
        if values.shape != expected:
            raise DataError(f"{self.model}: forecast shape {values.shape}, expected {expected}")
        object.__setattr__(self, "values", values)

    def restrict(self, dates: np.ndarray, hours: Sequence[int]) -> "ForecastSet":
        """Subset to the given dates and hours (all must be present)."""
        dates = np.asarray(dates, dtype="datetime64[D]")
        rows = np.searchsorted(self.dates, dates)
        if np.any(rows >= self.dates.size) or not np.array_equal(self.dates[np.minimum(rows, self.dates.size - 1)], dates):
            raise DataError(f"{self.model}: forecasts missing for some requested dates")
        cols = [self.hours.index(int(h)) for h in hours]
        return ForecastSet(self.model, dates, tuple(hours), self.values[np.ix_(rows, cols)], self.levels)

    def renamed(self, model: str) -> "ForecastSet":
        return ForecastSet(model, self.dates, self.hours, self.values, self.levels)


def load_forecast_file(
    path: Union[str, Path],
    model: Optional[str] = None,
    levels: Sequence[float] = LEVELS_99,
    monotone_tolerance: float = 0.0,
) -> ForecastSet:
    """
    Read a long-format quantile CSV (date, hour, alpha, value).

    Raises:
        SchemaError: a required column is missing
        DataError: listing every validation problem found
    """
    path = Path(path)
    model = model or path.stem
    frame = pd.read_csv(path)
    for column in FORECAST_COLUMNS:
        if column not in frame.columns:
            raise SchemaError(column, str(path))

    errors: List[str] = []
    dates = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    for row in np.flatnonzero(dates.isna().to_numpy())[:5]:
        errors.append(f"Row {row + 2}: invalid date {frame['date'].iloc[row]!r}")
    numeric = frame[["hour", "alpha", "value"]].apply(pd.to_numeric, errors="coerce")
    for row in np.flatnonzero(numeric.isna().any(axis=1).to_numpy())[:5]:
        errors.append(f"Row {row + 2}: non-numeric hour, alpha or value")
    if errors:
        raise DataError(f"{path}: " + "; ".join(errors))

    levels = np.round(np.asarray(levels, dtype=float), 6)
    tidy = pd.DataFrame(
        {
            "date": dates.dt.normalize(),
            "hour": numeric["hour"].astype(int),
            "alpha": np.round(numeric["alpha"].to_numpy(dtype=float), 6),
            "value": numeric["value"].to_numpy(dtype=float),
        }
    )
    if not np.all(np.isfinite(tidy["value"].to_numpy())):
        errors.append("non-finite forecast values")
    unknown = np.setdiff1d(tidy["alpha"].unique(), levels)
    if unknown.size:
        errors.append(f"unexpected levels {unknown[:5].tolist()}")
    duplicated = tidy.duplicated(["date", "hour", "alpha"])
    if duplicated.any():
        errors.append(f"{int(duplicated.sum())} duplicated (date, hour, alpha) rows")
    if errors:
        raise DataError(f"{path}: " + "; ".join(errors))

    wide = tidy.pivot(index=["date", "hour"], columns="alpha", values="value").reindex(columns=levels)
    incomplete = wide.isna().any(axis=1)
    if incomplete.any():
        date, hour = wide.index[np.flatnonzero(incomplete.to_numpy())[0]]
        raise DataError(f"{path}: missing levels for {date.date()} hour {hour}")

    day_index = pd.DatetimeIndex(np.sort(tidy["date"].unique()))
    hours = tuple(int(h) for h in np.sort(tidy["hour"].unique()))
    full = pd.MultiIndex.from_product([day_index, list(hours)], names=["date", "hour"])
    if len(wide) != len(full):
        raise DataError(f"{path}: (date, hour) grid is incomplete")
    day_values = day_index.to_numpy().astype("datetime64[D]")
    values = wide.reindex(full).to_numpy().reshape(day_values.size, len(hours), levels.size)

    if not check_monotone(values, monotone_tolerance):
        bad = np.argwhere(np.any(np.diff(values, axis=-1) < -monotone_tolerance, axis=-1))[0]
        raise DataError(f"{path}: quantiles decrease in alpha on {day_values[bad[0]]} hour {hours[bad[1]]}")

    logger.debug(f"Loaded {model}: {day_values.size} days x {len(hours)} hours")
    return ForecastSet(model, day_values, hours, values, levels)


class ForecastLoader:
    """Load every quantile forecast file in a directory with validation."""

    def __init__(self, source: Union[str, Path, Sequence[Union[str, Path]]], monotone_tolerance: float = 0.0):
        self.source = source
        self.monotone_tolerance = monotone_tolerance
        self.forecasts: Dict[str, ForecastSet] = {}
        self.validation_errors: List[str] = []

    def _files(self) -> List[Path]:
        if isinstance(self.source, (str, Path)):
            path = Path(self.source)
            if path.is_dir():
                return sorted(path.glob("*.csv"))
            return [path]
        return [Path(p) for p in self.source]

    @staticmethod
    def _is_quantile_file(path: Path) -> bool:
        header = pd.read_csv(path, nrows=0).columns
        return all(c in header for c in FORECAST_COLUMNS)

    def load_and_validate(self, models: Optional[Sequence[str]] = None) -> Dict[str, ForecastSet]:
        """Load all (or the named) forecast files; raise one DataError summarising failures."""
        files = self._files()
        if not files:
            raise DataError(f"No forecast files found in {self.source}")
        for path in files:
            if not path.exists():
                self.validation_errors.append(f"{path}: file not found")
                continue
            if models is not None and path.stem not in models:
                continue
            if not self._is_quantile_file(path):
                logger.debug(f"Skipping {path}: not a quantile forecast file")
                continue
            try:
                self.forecasts[path.stem] = load_forecast_file(path, monotone_tolerance=self.monotone_tolerance)
            except DataError as e:
                self.validation_errors.append(str(e))

        if self.validation_errors:
            for error in self.validation_errors:
                logger.warning(error)
            raise DataError(f"{len(self.validation_errors)} forecast file(s) failed validation: {self.validation_errors[0]}")
        if models is not None:
            missing = sorted(set(models) - set(self.forecasts))
            if missing:
                raise DataError(f"Requested model(s) not found: {missing}")
        logger.info(f"Loaded {len(self.forecasts)} forecast file(s)")
        return self.forecasts


def combine_forecasts(forecasts: Sequence[ForecastSet], model: str) -> ForecastSet:
    """Average quantiles of forecasts sharing an identical (date, hour, level) index."""
    if not forecasts:
        raise DataError("Nothing to combine")
    first = forecasts[0]
    for other in forecasts[1:]:
        if (
            not np.array_equal(first.dates, other.dates)
            or first.hours != other.hours
            or not np.allclose(first.levels, other.levels)
        ):
            raise DataError(f"Cannot combine {first.model} and {other.model}: index sets differ")
    values = np.mean([f.values for f in forecasts], axis=0)
    return ForecastSet(model, first.dates, first.hours, values, first.levels)


def group_runs(forecasts: Dict[str, ForecastSet], pattern: str) -> Dict[str, List[ForecastSet]]:
    """Group run files (e.g. distrnn_run0, distrnn_run1) by model name, ordered by run number."""
    regex = re.compile(pattern)
    groups: Dict[str, List[Tuple[int, ForecastSet]]] = {}
    for name, forecast in forecasts.items():
        match = regex.match(name)
        if match:
            groups.setdefault(match.group("model"), []).append((int(match.group("run")), forecast))
    return {model: [f for _, f in sorted(runs, key=lambda r: r[0])] for model, runs in sorted(groups.items())}


def common_index(forecasts: Sequence[ForecastSet]) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Dates and hours covered by every forecast."""
    dates = forecasts[0].dates
    hours = set(forecasts[0].hours)
    for f in forecasts[1:]:
        dates = np.intersect1d(dates, f.dates)
        hours &= set(f.hours)
    if dates.size == 0 or not hours:
        raise DataError("Forecasts do not overlap in (date, hour)")
    return dates, tuple(sorted(hours))


class EvalReport:
    """Class for generating evaluation reports."""

    def __init__(self, results: Dict[str, Any]):
        self.results = results

    @property
    def crps(self) -> pd.DataFrame:
        return self.results["crps"]

    @property
    def crps_tails(self) -> pd.DataFrame:
        return self.results["crps_tails"]

    @property
    def per_hour(self) -> pd.DataFrame:
        return self.results["per_hour"]

    @property
    def dm_daily(self) -> Optional[pd.DataFrame]:
        return self.results.get("dm_daily")

    @property
    def dm_hourly(self) -> Optional[pd.DataFrame]:
        return self.results.get("dm_hourly")

    def generate_summary_report(self) -> str:
        """Generate a summary report in text format."""
        summary = self.results.get("summary", {})
        report_lines = [
            "=" * 60,
            "PROBABILISTIC FORECAST EVALUATION REPORT",
            "=" * 60,
            "",
            "SUMMARY:",
            f"  Models: {summary.get('n_models', 0)}",
            f"  Days: {summary.get('n_days', 0)} ({summary.get('first_day', '-')} to {summary.get('last_day', '-')})",
            f"  Hours: {summary.get('n_hours', 0)}",
            "",
            "MEAN CRPS (all 99 levels):",
            "",
            self.crps.to_string(float_format=lambda v: f"{v:.3f}"),
            "",
            "MEAN CRPS (tail levels 1-10 and 90-99):",
            "",
            self.crps_tails.to_string(float_format=lambda v: f"{v:.3f}"),
            "",
        ]

        if self.dm_daily is not None:
            report_lines.extend(
                [
                    f"DIEBOLD-MARIANO P-VALUES ({summary.get('dm_sided', 'one')}-sided, daily losses):",
                    "  row = tested model, column = reference; small values favour the column model",
                    "",
                    self.results["dm_daily_labels"].to_string(),
                    "",
                ]
            )

        runs = self.results.get("runs", {})
        if runs:
            report_lines.extend(["RUN SELECTION:", ""])
            for model, info in runs.items():
                report_lines.append(f"  {model}: best run {info['best']} of {info['n_runs']} (CRPS {info['best_crps']:.3f})")
            report_lines.append("")

        report_lines.append("=" * 60)

        return "\n".join(report_lines)

    def save_report(self, filepath: str):
        """Save report to file."""
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(self.generate_summary_report() + "\n")

        logger.info(f"Report saved to {filepath}")

    def save_csv(self, directory: Union[str, Path]) -> List[Path]:
        """Write every report table as CSV."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        tables = {
            "crps.csv": self.crps,
            "crps_tails.csv": self.crps_tails,
            "crps_per_hour.csv": self.per_hour,
            "dm_daily.csv": self.results.get("dm_daily_labels"),
            "dm_hourly.csv": self.dm_hourly,
        }
        for name, table in tables.items():
            if table is None:
                continue
            path = directory / name
            table.to_csv(path, float_format="%.10g")
            written.append(path)
        logger.info(f"Wrote {len(written)} report table(s) to {directory}")
        return written

    def to_json_dict(self) -> Dict[str, Any]:
        def frame(df: Optional[pd.DataFrame]):
            if df is None:
                return None
            return json.loads(df.to_json(orient="split", double_precision=10))

        return {
            "summary": self.results.get("summary", {}),
            "crps": frame(self.crps),
            "crps_tails": frame(self.crps_tails),
            "per_hour": frame(self.per_hour),
            "dm_daily": frame(self.results.get("dm_daily_labels")),
            "runs": self.results.get("runs", {}),
        }

    def save_json_report(self, filepath: str):
        """Save results as JSON."""
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2, ensure_ascii=False)

        logger.info(f"JSON report saved to {filepath}")
