"""
Panel ingestion, winsorization, design matrices and rolling window schedules.

Input CSVs are in long format, one row per (date, hour), with daily scalar
series repeated on every hour row of their day.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from .cdftools import QuantileTable
from .errors import ConfigError, DataError, IngestionError, InsufficientHistoryError, SchemaError

logger = logging.getLogger(__name__)

HOURS = 24
MIN_HISTORY = 7
CACHE_VERSION = "epf-cache-1"

DateLike = Union[str, np.datetime64, pd.Timestamp]

# (name, width) in row order; the indicator block width is the number of levels
FEATURE_BLOCKS: Tuple[Tuple[str, int], ...] = (
    ("price_lag1", HOURS),
    ("price_lag2", HOURS),
    ("price_lag3", HOURS),
    ("price_lag7", HOURS),
    ("indicator", -1),
    ("load_d0", HOURS),
    ("load_lag1", HOURS),
    ("load_lag7", HOURS),
    ("res_d0", HOURS),
    ("res_lag1", HOURS),
    ("eua_lag2", 1),
    ("coal_lag2", 1),
    ("gas_lag2", 1),
    ("oil_lag2", 1),
    ("weekday", 1),
)

PRICE_BLOCKS = ("price_lag1", "price_lag2", "price_lag3", "price_lag7")


def to_day(value: DateLike) -> np.datetime64:
    """Normalize a date-like value to numpy day resolution."""
    return np.datetime64(pd.Timestamp(value).date(), "D")


@dataclass(frozen=True)
class PanelSchema:
    """Map from logical series names to CSV header names."""

    date: str = "date"
    hour: str = "hour"
    price: str = "price"
    load_fc: str = "load_forecast"
    res_fc: str = "res_forecast"
    eua: str = "eua"
    coal: str = "coal"
    gas: str = "gas"
    oil: str = "oil"

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, str]]) -> "PanelSchema":
        try:
            return cls(**(data or {}))
        except TypeError as e:
            raise ConfigError(f"Invalid panel schema: {e}") from e

    def numeric_columns(self) -> Dict[str, str]:
        return {
            "price": self.price,
            "load_fc": self.load_fc,
            "res_fc": self.res_fc,
            "eua": self.eua,
            "coal": self.coal,
            "gas": self.gas,
            "oil": self.oil,
        }


@dataclass(frozen=True)
class PricePanel:
    """Calendar-indexed hourly prices with exogenous series."""

    days: np.ndarray
    prices: np.ndarray
    load_fc: np.ndarray
    res_fc: np.ndarray
    eua: np.ndarray
    coal: np.ndarray
    gas: np.ndarray
    oil: np.ndarray
    weekday: np.ndarray = field(default=None)

    def __post_init__(self):
        days = np.asarray(self.days, dtype="datetime64[D]")
        object.__setattr__(self, "days", days)
        n = days.shape[0]
        if n == 0:
            raise DataError("Panel has no days")
        if n > 1 and np.any(np.diff(days).astype(int) != 1):
            raise DataError("Panel days must be strictly increasing without gaps")

        for name in ("prices", "load_fc", "res_fc"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n, HOURS):
                raise DataError(f"Panel field '{name}' has shape {arr.shape}, expected {(n, HOURS)}")
            object.__setattr__(self, name, arr)
        for name in ("eua", "coal", "gas", "oil"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (n,):
                raise DataError(f"Panel field '{name}' has shape {arr.shape}, expected {(n,)}")
            object.__setattr__(self, name, arr)

        if self.weekday is None:
            weekday = pd.DatetimeIndex(days).dayofweek.to_numpy() + 1
        else:
            weekday = np.asarray(self.weekday)
        object.__setattr__(self, "weekday", weekday.astype(int))

        for name in ("prices", "load_fc", "res_fc", "eua", "coal", "gas", "oil"):
            arr = getattr(self, name)
            arr.setflags(write=False)
            if not np.all(np.isfinite(arr)):
                raise DataError(f"Panel field '{name}' contains non-finite values")

    @property
    def n_days(self) -> int:
        return int(self.days.shape[0])

    def index_of(self, day: DateLike) -> int:
        """Row index of a calendar date."""
        target = to_day(day)
        idx = int(np.searchsorted(self.days, target))
        if idx >= self.n_days or self.days[idx] != target:
            raise DataError(f"Date {target} not in panel [{self.days[0]}, {self.days[-1]}]")
        return idx

    def with_prices(self, prices: np.ndarray) -> "PricePanel":
        return replace(self, prices=np.array(prices, dtype=float))

    def data_hash(self) -> str:
        """SHA-256 over all panel arrays."""
        digest = hashlib.sha256()
        digest.update(self.days.astype("int64").tobytes())
        for name in ("prices", "load_fc", "res_fc", "eua", "coal", "gas", "oil"):
            digest.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class DesignRow:
    """Feature vector for one (day, hour) task."""

    features: np.ndarray
    target_day: np.datetime64
    target_hour: int


@dataclass(frozen=True)
class ScheduleEntry:
    """One rolling step: training window, validation tail and test day."""

    train: range
    val: range
    test_day: int
    retrain: bool
    subperiod: int

    @property
    def window(self) -> range:
        return range(self.train.start, self.val.stop)


@dataclass(frozen=True)
class WindowSchedule:
    """Ordered rolling schedule over the out-of-sample period."""

    entries: Tuple[ScheduleEntry, ...]
    train_val_len: int
    calibration_len: int = 182

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, item):
        return self.entries[item]

    @property
    def test_days(self) -> np.ndarray:
        return np.array([e.test_day for e in self.entries], dtype=int)

    def truncated(self, n_entries: int) -> "WindowSchedule":
        return replace(self, entries=self.entries[:n_entries])

    def to_frame(self, panel: PricePanel) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "test_date": str(panel.days[e.test_day]),
                    "train_start": e.train.start,
                    "train_stop": e.train.stop,
                    "val_start": e.val.start,
                    "val_stop": e.val.stop,
                    "test_day": e.test_day,
                    "retrain": e.retrain,
                    "subperiod": e.subperiod,
                }
                for e in self.entries
            ]
        )


def load_panel(path: Union[str, Path], schema: Optional[PanelSchema] = None) -> PricePanel:
    """
    Load a long-format CSV panel.

    Args:
        path: CSV file path
        schema: Column mapping (defaults to PanelSchema())

    Returns:
        PricePanel sorted by date

    Raises:
        SchemaError: a mapped column is missing
        IngestionError: bad cell, duplicate or missing hour, or calendar gap
    """
    schema = schema or PanelSchema()
    path = Path(path)
    if not path.exists():
        raise DataError(f"Panel file not found: {path}")

    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.columns = [c.strip() for c in df.columns]
    required = [schema.date, schema.hour] + list(schema.numeric_columns().values())
    for column in required:
        if column not in df.columns:
            raise SchemaError(column, str(path))

    line_numbers = df.index.to_numpy() + 2

    dates = pd.to_datetime(df[schema.date].str.strip(), format="%Y-%m-%d", errors="coerce")
    bad = dates.isna().to_numpy()
    if bad.any():
        row = int(line_numbers[np.argmax(bad)])
        raise IngestionError(f"Unparseable date '{df[schema.date].iloc[np.argmax(bad)]}'", row=row)

    parsed: Dict[str, np.ndarray] = {}
    for logical, column in [("hour", schema.hour)] + list(schema.numeric_columns().items()):
        values = pd.to_numeric(df[column].str.strip(), errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            pos = int(np.argmax(bad))
            raise IngestionError(
                f"Non-numeric or missing value '{df[column].iloc[pos]}' in column '{column}'",
                row=int(line_numbers[pos]),
                date=str(dates.iloc[pos].date()),
            )
        parsed[logical] = values

    hours = parsed["hour"]
    if np.any((hours < 1) | (hours > HOURS) | (hours != np.round(hours))):
        pos = int(np.argmax((hours < 1) | (hours > HOURS) | (hours != np.round(hours))))
        raise IngestionError(f"Hour {hours[pos]} outside 1..{HOURS}", row=int(line_numbers[pos]))

    frame = pd.DataFrame({"date": dates.dt.normalize(), "hour": hours.astype(int), "line": line_numbers})
    for logical, values in parsed.items():
        if logical != "hour":
            frame[logical] = values

    duplicated = frame.duplicated(subset=["date", "hour"]).to_numpy()
    if duplicated.any():
        pos = int(np.argmax(duplicated))
        raise IngestionError(
            f"Duplicate hour {frame['hour'].iloc[pos]}",
            row=int(frame["line"].iloc[pos]),
            date=str(frame["date"].iloc[pos].date()),
        )

    frame = frame.sort_values(["date", "hour"], kind="mergesort")
    unique_days = frame["date"].drop_duplicates().to_numpy(dtype="datetime64[D]")
    if unique_days.size > 1:
        gaps = np.diff(unique_days).astype(int) != 1
        if gaps.any():
            after = unique_days[int(np.argmax(gaps)) + 1]
            first_line = int(frame.loc[frame["date"] == pd.Timestamp(after), "line"].min())
            raise IngestionError(f"Calendar gap before {after}", row=first_line, date=str(after))

    matrices = {}
    for logical in ("price", "load_fc", "res_fc"):
        wide = frame.pivot(index="date", columns="hour", values=logical).reindex(columns=range(1, HOURS + 1))
        missing = wide.isna().to_numpy()
        if missing.any():
            day_pos, hour_pos = np.argwhere(missing)[0]
            raise IngestionError(
                f"Missing {logical} for hour {hour_pos + 1}",
                date=str(wide.index[day_pos].date()),
            )
        matrices[logical] = wide.to_numpy(dtype=float)

    daily = frame.groupby("date", sort=True)[["eua", "coal", "gas", "oil"]].first()

    panel = PricePanel(
        days=unique_days,
        prices=matrices["price"],
        load_fc=matrices["load_fc"],
        res_fc=matrices["res_fc"],
        eua=daily["eua"].to_numpy(),
        coal=daily["coal"].to_numpy(),
        gas=daily["gas"].to_numpy(),
        oil=daily["oil"].to_numpy(),
    )
    logger.info(f"Loaded panel from {path}: {panel.n_days} days ({panel.days[0]} .. {panel.days[-1]})")
    return panel


def write_panel_csv(panel: PricePanel, path: Union[str, Path], schema: Optional[PanelSchema] = None) -> Path:
    """Write a panel in the long CSV format read by load_panel."""
    schema = schema or PanelSchema()
    n = panel.n_days
    day_strings = np.repeat(panel.days.astype(str), HOURS)
    frame = pd.DataFrame(
        {
            schema.date: day_strings,
            schema.hour: np.tile(np.arange(1, HOURS + 1), n),
            schema.price: panel.prices.ravel(),
            schema.load_fc: panel.load_fc.ravel(),
            schema.res_fc: panel.res_fc.ravel(),
            schema.eua: np.repeat(panel.eua, HOURS),
            schema.coal: np.repeat(panel.coal, HOURS),
            schema.gas: np.repeat(panel.gas, HOURS),
            schema.oil: np.repeat(panel.oil, HOURS),
        }
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def winsorize(values: np.ndarray, proportion: float) -> np.ndarray:
    """
    Clamp extreme values to the bracketing order statistics.

    The lower bound is the order statistic at rank floor((n-1)p) and the
    upper bound its mirror image, so repeated application is a no-op.
    Bounds are never interpolated between neighbours: with 1..1000 and
    p=0.001 the lower bound is 1, not 1.999, and the input comes back
    unchanged.

    Raises:
        DataError: empty input or proportion outside [0, 0.5)
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DataError("Cannot winsorize an empty vector")
    lo, hi = winsor_bounds(values, proportion)
    return np.clip(values, lo, hi)


def winsor_bounds(values: np.ndarray, proportion: float) -> Tuple[float, float]:
    """Lower and upper clamp levels for a proportion."""
    if not 0.0 <= proportion < 0.5:
        raise DataError(f"Winsorization proportion must be in [0, 0.5), got {proportion}")
    flat = np.asarray(values, dtype=float).ravel()
    if flat.size == 0:
        raise DataError("Cannot winsorize an empty vector")
    lo = np.quantile(flat, proportion, method="lower")
    hi = np.quantile(flat, 1.0 - proportion, method="higher")
    return float(lo), float(hi)


def winsorize_panel(panel: PricePanel, window: range, proportion: float) -> PricePanel:
    """
    Winsorize every series with bounds fitted on a window of days.

    Bounds are computed per hour for hourly series and per series for daily
    scalars, using only rows in the window; they are applied to all rows.
    """
    if proportion == 0.0:
        return panel
    rows = np.arange(window.start, window.stop)
    updates = {}
    for name in ("prices", "load_fc", "res_fc"):
        arr = getattr(panel, name)
        clipped = np.empty_like(arr)
        for h in range(HOURS):
            lo, hi = winsor_bounds(arr[rows, h], proportion)
            clipped[:, h] = np.clip(arr[:, h], lo, hi)
        updates[name] = clipped
    for name in ("eua", "coal", "gas", "oil"):
        arr = getattr(panel, name)
        lo, hi = winsor_bounds(arr[rows], proportion)
        updates[name] = np.clip(arr, lo, hi)
    return replace(panel, **updates)


def design_width(k: int) -> int:
    """Number of features for k probability levels."""
    return sum(width if width > 0 else k for _, width in FEATURE_BLOCKS)


def block_slices(k: int) -> Dict[str, slice]:
    """Column slices of each feature block."""
    slices = {}
    start = 0
    for name, width in FEATURE_BLOCKS:
        width = width if width > 0 else k
        slices[name] = slice(start, start + width)
        start += width
    return slices


def _check_days(panel: PricePanel, days: np.ndarray) -> np.ndarray:
    days = np.atleast_1d(np.asarray(days, dtype=int))
    if days.size == 0:
        raise DataError("No days requested")
    if days.min() < MIN_HISTORY:
        earliest = str(panel.days[MIN_HISTORY]) if panel.n_days > MIN_HISTORY else None
        raise InsufficientHistoryError(
            f"Day index {days.min()} has fewer than {MIN_HISTORY} days of history", earliest
        )
    if days.max() >= panel.n_days:
        raise DataError(f"Day index {days.max()} beyond panel end ({panel.n_days} days)")
    return days


def _common_blocks(panel: PricePanel, days: np.ndarray) -> Dict[str, np.ndarray]:
    col = lambda v: v[:, None]
    return {
        "price_lag1": panel.prices[days - 1],
        "price_lag2": panel.prices[days - 2],
        "price_lag3": panel.prices[days - 3],
        "price_lag7": panel.prices[days - 7],
        "load_d0": panel.load_fc[days],
        "load_lag1": panel.load_fc[days - 1],
        "load_lag7": panel.load_fc[days - 7],
        "res_d0": panel.res_fc[days],
        "res_lag1": panel.res_fc[days - 1],
        "eua_lag2": col(panel.eua[days - 2]),
        "coal_lag2": col(panel.coal[days - 2]),
        "gas_lag2": col(panel.gas[days - 2]),
        "oil_lag2": col(panel.oil[days - 2]),
        "weekday": col(panel.weekday[days].astype(float)),
    }


def build_design_matrix(panel: PricePanel, q: QuantileTable, days: Sequence[int], hour: int) -> np.ndarray:
    """
    Design rows for several days of one hour.

    Args:
        panel: Source panel
        q: Per-hour quantile table in the same units as panel prices
        days: Target day indices
        hour: Target hour, 1..24

    Returns:
        len(days) x design_width(k) matrix
    """
    if not 1 <= hour <= HOURS:
        raise DataError(f"Hour must be in 1..{HOURS}, got {hour}")
    if q.values.shape[0] != HOURS:
        raise DataError(f"Quantile table covers {q.values.shape[0]} hours, expected {HOURS}")
    days = _check_days(panel, days)
    blocks = _common_blocks(panel, days)
    previous = panel.prices[days - 1, hour - 1]
    blocks["indicator"] = (previous[:, None] <= q.values[hour - 1][None, :]).astype(float)
    return np.hstack([blocks[name] for name, _ in FEATURE_BLOCKS])


def build_design_row(panel: PricePanel, q: QuantileTable, t: int, h: int) -> DesignRow:
    """Design row for day index t and hour h (1..24)."""
    features = build_design_matrix(panel, q, [t], h)[0]
    return DesignRow(features=features, target_day=panel.days[t], target_hour=h)


def build_lear_matrix(panel: PricePanel, days: Sequence[int]) -> np.ndarray:
    """
    Regressors for the LASSO point model.

    Same blocks as the network rows without the indicator block, with the
    weekday integer replaced by 7 weekday dummies.
    """
    days = _check_days(panel, days)
    blocks = _common_blocks(panel, days)
    dummies = np.zeros((days.size, 7))
    dummies[np.arange(days.size), panel.weekday[days] - 1] = 1.0
    blocks["weekday"] = dummies
    return np.hstack([blocks[name] for name, _ in FEATURE_BLOCKS if name != "indicator"])


class FeatureScaler:
    """
    Z-scores the exogenous blocks of design rows.

    Price blocks are expected on the asinh scale already and the indicator
    block is left as is.
    """

    def __init__(self, k: int):
        slices = block_slices(k)
        self.k = k
        self.columns = np.concatenate(
            [np.arange(s.start, s.stop) for name, s in slices.items() if name not in PRICE_BLOCKS + ("indicator",)]
        )
        self._scaler = StandardScaler()

    def fit(self, rows: np.ndarray) -> "FeatureScaler":
        self._scaler.fit(rows[:, self.columns])
        return self

    def transform(self, rows: np.ndarray) -> np.ndarray:
        out = np.array(rows, dtype=float, copy=True)
        out[:, self.columns] = self._scaler.transform(rows[:, self.columns])
        return out

    def fit_transform(self, rows: np.ndarray) -> np.ndarray:
        return self.fit(rows).transform(rows)


def make_schedule(
    panel: PricePanel,
    train_val_len: int,
    oos_start: DateLike,
    oos_end: DateLike,
    subperiod_bounds: Sequence[DateLike] = (),
    val_fraction: float = 0.2,
    calibration_len: int = 182,
) -> WindowSchedule:
    """
    Rolling schedule with one entry per out-of-sample day.

    Each window holds the train_val_len days before its test day; the last
    val_fraction of it is recorded as the validation tail. Retrain events
    fall on the first entry and on every subperiod boundary.

    Raises:
        InsufficientHistoryError: the first window starts before the panel
    """
    if train_val_len < 2:
        raise DataError(f"Window length must be at least 2 days, got {train_val_len}")
    start_idx = panel.index_of(oos_start)
    end_idx = panel.index_of(oos_end)
    if end_idx < start_idx:
        raise DataError(f"OOS end {oos_end} precedes OOS start {oos_start}")
    if start_idx - train_val_len < 0:
        earliest = str(panel.days[train_val_len]) if panel.n_days > train_val_len else None
        raise InsufficientHistoryError(
            f"OOS start {to_day(oos_start)} needs {train_val_len} days of history", earliest
        )

    bounds = {to_day(b) for b in subperiod_bounds}
    n_val = max(1, int(round(val_fraction * train_val_len)))
    entries: List[ScheduleEntry] = []
    subperiod = -1
    for d in range(start_idx, end_idx + 1):
        retrain = d == start_idx or panel.days[d] in bounds
        if retrain:
            subperiod += 1
        window_start = d - train_val_len
        entries.append(
            ScheduleEntry(
                train=range(window_start, d - n_val),
                val=range(d - n_val, d),
                test_day=d,
                retrain=retrain,
                subperiod=subperiod,
            )
        )
    logger.info(
        f"Schedule: {len(entries)} OOS days, window {train_val_len}, {subperiod + 1} subperiod(s)"
    )
    return WindowSchedule(entries=tuple(entries), train_val_len=train_val_len, calibration_len=calibration_len)


def save_cache(path: Union[str, Path], kind: str, **arrays: np.ndarray) -> Path:
    """Write arrays to a version-tagged .npz cache."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, __version__=np.array(CACHE_VERSION), __kind__=np.array(kind), **arrays)
    return path


def load_cache(path: Union[str, Path], kind: str) -> Dict[str, np.ndarray]:
    """Read a cache written by save_cache, checking version and kind."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Cache file not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        version = str(data["__version__"]) if "__version__" in data else None
        stored_kind = str(data["__kind__"]) if "__kind__" in data else None
        if version != CACHE_VERSION or stored_kind != kind:
            raise DataError(
                f"Cache {path} has version {version}/{stored_kind}, expected {CACHE_VERSION}/{kind}"
            )
        return {key: data[key] for key in data.files if not key.startswith("__")}


def save_panel_cache(panel: PricePanel, path: Union[str, Path]) -> Path:
    return save_cache(
        path,
        "panel",
        days=panel.days.astype("int64"),
        prices=panel.prices,
        load_fc=panel.load_fc,
        res_fc=panel.res_fc,
        eua=panel.eua,
        coal=panel.coal,
        gas=panel.gas,
        oil=panel.oil,
    )


def load_panel_cache(path: Union[str, Path]) -> PricePanel:
    data = load_cache(path, "panel")
    data["days"] = data["days"].astype("datetime64[D]")
    return PricePanel(**data)


def save_design_cache(path: Union[str, Path], rows: np.ndarray, targets: np.ndarray, days: np.ndarray, hour: int) -> Path:
    return save_cache(path, "design", rows=rows, targets=targets, days=np.asarray(days), hour=np.array(hour))


def load_design_cache(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    return load_cache(path, "design")
