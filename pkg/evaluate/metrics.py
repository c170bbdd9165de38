"""
Scoring rules and forecast comparison tests.

Pinball loss and its discrete CRPS average are computed on price-space
quantiles. The Diebold-Mariano test uses a Newey-West long-run variance
with a Bartlett kernel and lag truncation floor(T^(1/3)).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from epf.cdftools import LEVELS_99
from epf.errors import DataError

logger = logging.getLogger(__name__)

TAIL_LEVELS = np.round(np.concatenate([np.arange(1, 11), np.arange(90, 100)]) / 100.0, 2)
MIN_DM_DAYS = 30
INDETERMINATE = "indeterminate"

ArrayLike = Union[float, np.ndarray]


def pinball(q_hat: ArrayLike, price: ArrayLike, alpha: ArrayLike) -> ArrayLike:
    """(1{p <= q} - alpha)(q - p), elementwise with broadcasting."""
    q_hat = np.asarray(q_hat, dtype=float)
    price = np.asarray(price, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    loss = ((price <= q_hat).astype(float) - alpha) * (q_hat - price)
    return loss if loss.ndim else float(loss)


def level_mask(levels: Sequence[float], subset: Optional[Sequence[float]] = None) -> np.ndarray:
    """Boolean mask of the forecast levels belonging to subset (all levels if None)."""
    levels = np.round(np.asarray(levels, dtype=float), 6)
    if subset is None:
        return np.ones(levels.size, dtype=bool)
    mask = np.isin(levels, np.round(np.asarray(subset, dtype=float), 6))
    if not mask.any():
        raise DataError("Level subset shares no level with the forecast")
    return mask


def crps(
    forecast: np.ndarray,
    price: ArrayLike,
    levels: Sequence[float] = LEVELS_99,
    subset: Optional[Sequence[float]] = None,
) -> ArrayLike:
    """
    Discrete CRPS: mean pinball loss over the chosen levels.

    Args:
        forecast: (..., n_levels) quantiles
        price: (...) realized prices
        levels: Levels of the forecast's last axis
        subset: Levels to average over (all by default, TAIL_LEVELS for tails)

    Returns:
        CRPS with the leading shape of forecast
    """
    forecast = np.asarray(forecast, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if forecast.shape[-1] != levels.size:
        raise DataError(f"Forecast has {forecast.shape[-1]} levels, expected {levels.size}")
    mask = level_mask(levels, subset)
    price = np.asarray(price, dtype=float)[..., None]
    values = pinball(forecast[..., mask], price, levels[mask]).mean(axis=-1)
    return values if values.ndim else float(values)


@dataclass(frozen=True, eq=False)
class LossPanel:
    """Day x hour CRPS values of one model."""

    model: str
    dates: np.ndarray
    hours: tuple
    values: np.ndarray
    subset: str = "all"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.dates), len(self.hours)):
            raise DataError(f"{self.model}: loss shape {values.shape} does not match {len(self.dates)} days x {len(self.hours)} hours")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise DataError(f"{self.model}: losses must be finite and non-negative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[D]"))
        object.__setattr__(self, "hours", tuple(int(h) for h in self.hours))

    @property
    def daily(self) -> np.ndarray:
        """Losses summed over hours."""
        return self.values.sum(axis=1)

    def mean(self, mask: Optional[np.ndarray] = None) -> float:
        values = self.values if mask is None else self.values[mask]
        return float(values.mean()) if values.size else float("nan")

    def per_hour(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        values = self.values if mask is None else self.values[mask]
        return values.mean(axis=0)


def loss_panel(
    model: str,
    dates: np.ndarray,
    hours: Sequence[int],
    quantiles: np.ndarray,
    prices: np.ndarray,
    levels: Sequence[float] = LEVELS_99,
    subset: Optional[Sequence[float]] = None,
) -> LossPanel:
    """CRPS panel from days x hours x levels quantiles and days x hours prices."""
    label = "all" if subset is None else "tails"
    return LossPanel(model, dates, tuple(hours), crps(quantiles, prices, levels, subset), label)


@dataclass(frozen=True)
class DmResult:
    """Outcome of one Diebold-Mariano test."""

    statistic: float
    p_value: float
    n: int
    mean_diff: float
    sided: str = "one"
    indeterminate: bool = False

    def label(self, digits: int = 4) -> str:
        return INDETERMINATE if self.indeterminate else f"{self.p_value:.{digits}f}"


def newey_west_variance(diff: np.ndarray, lags: Optional[int] = None) -> float:
    """Long-run variance of diff with Bartlett weights 1 - l/(L+1)."""
    diff = np.asarray(diff, dtype=float)
    n = diff.size
    lags = int(np.floor(n ** (1.0 / 3.0))) if lags is None else int(lags)
    centered = diff - diff.mean()
    variance = float(centered @ centered) / n
    for lag in range(1, min(lags, n - 1) + 1):
        gamma = float(centered[lag:] @ centered[:-lag]) / n
        variance += 2.0 * (1.0 - lag / (lags + 1.0)) * gamma
    return variance


def dm_statistic(diff: np.ndarray, sided: str = "one") -> DmResult:
    """
    Diebold-Mariano test on a loss differential series d = L_A - L_B.

    The one-sided null is E[d] <= 0; small p-values mean B is more accurate.
    """
    if sided not in ("one", "two"):
        raise DataError(f"sided must be 'one' or 'two', got {sided!r}")
    diff = np.asarray(diff, dtype=float)
    n = diff.size
    if n < MIN_DM_DAYS:
        raise DataError(f"DM test needs at least {MIN_DM_DAYS} observations, got {n}")
    if not np.all(np.isfinite(diff)):
        raise DataError("Loss differentials must be finite")

    mean = float(diff.mean())
    variance = newey_west_variance(diff)
    scale = max(1.0, float(np.mean(diff**2)))
    if not variance > 1e-14 * scale:
        return DmResult(statistic=float("nan"), p_value=float("nan"), n=n, mean_diff=mean, sided=sided, indeterminate=True)

    statistic = mean / np.sqrt(variance / n)
    p_value = float(norm.sf(statistic)) if sided == "one" else float(2.0 * norm.sf(abs(statistic)))
    return DmResult(statistic=float(statistic), p_value=p_value, n=n, mean_diff=mean, sided=sided)


def _check_aligned(a: LossPanel, b: LossPanel) -> None:
    if not np.array_equal(a.dates, b.dates) or a.hours != b.hours:
        raise DataError(f"Loss panels {a.model} and {b.model} are not aligned")


def dm_test(a: LossPanel, b: LossPanel, mode: str = "daily", sided: str = "one") -> Union[DmResult, Dict[int, DmResult]]:
    """
    Compare two aligned loss panels.

    Args:
        a: Losses of the tested model
        b: Losses of the reference model
        mode: "daily" sums losses over hours; "hourly" tests every hour separately
        sided: "one" (H0: E[L_A - L_B] <= 0) or "two"

    Returns:
        DmResult for daily mode, hour -> DmResult for hourly mode
    """
    _check_aligned(a, b)
    if mode == "daily":
        return dm_statistic(a.daily - b.daily, sided)
    if mode == "hourly":
        return {h: dm_statistic(a.values[:, j] - b.values[:, j], sided) for j, h in enumerate(a.hours)}
    raise DataError(f"mode must be 'daily' or 'hourly', got {mode!r}")
