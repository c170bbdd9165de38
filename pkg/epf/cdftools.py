"""
CDF targets, monotone interpolation, inversion to quantiles and ensembling.

The network predicts F(q_h^alpha_j) on a 31-point support of unconditional
quantiles. Those probabilities are repaired, interpolated with a
Fritsch-Carlson monotone cubic, sampled on a grid and inverted into the 99
reporting quantiles.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DataError

logger = logging.getLogger(__name__)

LEVELS_31 = np.linspace(0.01, 0.99, 31)
LEVELS_99 = np.round(np.arange(1, 100) / 100.0, 2)
REPAIR_EPS = 1e-6
GRID_N = 400


@dataclass(frozen=True)
class QuantileTable:
    """Per-hour unconditional quantiles: values[h, j] at levels[j]."""

    levels: np.ndarray
    values: np.ndarray

    @property
    def k(self) -> int:
        return int(self.levels.shape[0])

    def support(self, hour: int) -> np.ndarray:
        """Support for hour 1..24."""
        return self.values[hour - 1]


def unconditional_quantiles(train_prices: np.ndarray, levels: Sequence[float] = LEVELS_31) -> QuantileTable:
    """
    Empirical quantiles per hour (linear interpolation between order statistics).

    Args:
        train_prices: days x hours matrix of window prices
        levels: Probability levels

    Raises:
        DataError: fewer observations than levels
    """
    prices = np.asarray(train_prices, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if prices.ndim != 2:
        raise DataError(f"Expected a days x hours matrix, got shape {prices.shape}")
    if prices.shape[0] < levels.size:
        raise DataError(f"Need at least {levels.size} observations per hour, got {prices.shape[0]}")
    values = np.quantile(prices, levels, axis=0).T
    return QuantileTable(levels=levels, values=np.maximum.accumulate(values, axis=1))


def target_indicators(prices: np.ndarray, q: QuantileTable) -> np.ndarray:
    """Indicators 1{p_{t,h} <= q_h^alpha_j}, shape days x hours x k."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 2 or prices.shape[1] != q.values.shape[0]:
        raise DataError(f"Prices of shape {prices.shape} do not match table for {q.values.shape[0]} hours")
    return (prices[:, :, None] <= q.values[None, :, :]).astype(np.uint8)


class MonotoneCubic:
    """
    Fritsch-Carlson monotone cubic Hermite interpolant.

    Values outside the knot range are held at the end knots.
    """

    def __init__(self, knots_x: np.ndarray, knots_y: np.ndarray):
        x = np.asarray(knots_x, dtype=float)
        y = np.asarray(knots_y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise DataError(f"Need matching 1-D knot vectors of length >= 2, got {x.shape} and {y.shape}")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise DataError("Knots must be strictly increasing in x and y")

        h = np.diff(x)
        delta = np.diff(y) / h
        m = np.empty_like(x)
        m[0] = delta[0]
        m[-1] = delta[-1]
        m[1:-1] = 0.5 * (delta[:-1] + delta[1:])

        for k in range(delta.size):
            a = m[k] / delta[k]
            b = m[k + 1] / delta[k]
            radius = a * a + b * b
            if radius > 9.0:
                tau = 3.0 / np.sqrt(radius)
                m[k] = tau * a * delta[k]
                m[k + 1] = tau * b * delta[k]

        self.x = x
        self.y = y
        self.h = h
        self.m = m

    def __call__(self, points: Union[float, np.ndarray]) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        clipped = np.clip(pts, self.x[0], self.x[-1])
        idx = np.clip(np.searchsorted(self.x, clipped, side="right") - 1, 0, self.x.size - 2)

        h = self.h[idx]
        t = (clipped - self.x[idx]) / h
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return h00 * self.y[idx] + h10 * h * self.m[idx] + h01 * self.y[idx + 1] + h11 * h * self.m[idx + 1]


def monotone_cubic(knots_x: np.ndarray, knots_y: np.ndarray) -> MonotoneCubic:
    return MonotoneCubic(knots_x, knots_y)


def repair_probabilities(raw: np.ndarray, eps: float = REPAIR_EPS) -> np.ndarray:
    """Cumulative maximum, then eps-separation strictly inside (0, 1)."""
    p = np.maximum.accumulate(np.clip(np.asarray(raw, dtype=float), eps, 1.0 - eps))
    for j in range(1, p.size):
        p[j] = max(p[j], p[j - 1] + eps)
    if p[-1] > 1.0 - eps:
        p[-1] = 1.0 - eps
        for j in range(p.size - 2, -1, -1):
            p[j] = min(p[j], p[j + 1] - eps)
    return p


def _separate(values: np.ndarray) -> np.ndarray:
    """Nudge ties in a non-decreasing support apart."""
    out = np.array(values, dtype=float)
    span = max(1.0, float(out[-1] - out[0]))
    gap = 1e-9 * span
    for j in range(1, out.size):
        out[j] = max(out[j], out[j - 1] + gap)
    return out


def fit_cdf(
    raw: np.ndarray,
    support: np.ndarray,
    tail_anchors: Tuple[float, float],
) -> MonotoneCubic:
    """Monotone CDF through the repaired probabilities and the tail anchors."""
    raw = np.asarray(raw, dtype=float)
    support = np.asarray(support, dtype=float)
    if raw.shape != support.shape:
        raise DataError(f"Probabilities {raw.shape} and support {support.shape} differ in shape")
    if np.any(np.diff(support) < 0):
        raise DataError("Support must be non-decreasing")
    low, high = float(tail_anchors[0]), float(tail_anchors[1])
    if low > support[0] or high < support[-1]:
        raise DataError(
            f"Tail anchors ({low}, {high}) fall inside the support [{support[0]}, {support[-1]}]"
        )

    xs = _separate(support)
    gap = 1e-9 * max(1.0, float(xs[-1] - xs[0]))
    low = min(low, xs[0] - gap)
    high = max(high, xs[-1] + gap)
    probs = repair_probabilities(raw)
    return MonotoneCubic(np.concatenate([[low], xs, [high]]), np.concatenate([[0.0], probs, [1.0]]))


def cdf_to_quantiles(
    raw: np.ndarray,
    support: np.ndarray,
    tail_anchors: Tuple[float, float],
    grid_n: int = GRID_N,
    levels: Sequence[float] = LEVELS_99,
) -> np.ndarray:
    """
    Turn raw network probabilities into quantiles.

    Args:
        raw: k probabilities at the support points (may be non-monotone)
        support: k non-decreasing support values
        tail_anchors: (low, high) values bracketing the support, mapped to 0 and 1
        grid_n: Number of grid points for inversion
        levels: Quantile levels to return

    Returns:
        Non-decreasing vector of quantiles
    """
    cdf = fit_cdf(raw, support, tail_anchors)
    grid = np.linspace(cdf.x[0], cdf.x[-1], grid_n)
    probs = np.maximum.accumulate(cdf(grid))
    quantiles = np.interp(np.asarray(levels, dtype=float), probs, grid)
    return np.maximum.accumulate(quantiles)


def ensemble_average(forecasts: Sequence[np.ndarray], val_losses: Sequence[float]) -> np.ndarray:
    """
    Average the better half of an ensemble.

    Keeps the ceil(n/2) members with the smallest validation loss (ties by
    position) and averages their quantiles level by level.
    """
    if len(forecasts) == 0:
        raise DataError("Cannot average an empty ensemble")
    if len(forecasts) != len(val_losses):
        raise DataError(f"{len(forecasts)} forecasts but {len(val_losses)} validation losses")
    stacked = np.vstack([np.asarray(f, dtype=float) for f in forecasts])
    keep = int(np.ceil(len(forecasts) / 2))
    order = np.argsort(np.asarray(val_losses, dtype=float), kind="stable")[:keep]
    return stacked[np.sort(order)].mean(axis=0)


def check_monotone(values: np.ndarray, tol: float = 0.0) -> bool:
    """True if values are non-decreasing along the last axis."""
    return bool(np.all(np.diff(np.asarray(values, dtype=float), axis=-1) >= -tol))


def write_quantile_forecasts(
    path: Union[str, Path],
    days: Sequence,
    hours: Sequence[int],
    quantiles: np.ndarray,
    levels: Sequence[float] = LEVELS_99,
) -> Path:
    """
    Write quantiles of shape days x hours x levels as a long CSV.

    Columns: date, hour, alpha, value.
    """
    quantiles = np.asarray(quantiles, dtype=float)
    days = np.asarray(days, dtype="datetime64[D]")
    hours = np.asarray(hours, dtype=int)
    levels = np.asarray(levels, dtype=float)
    if quantiles.shape != (days.size, hours.size, levels.size):
        raise DataError(f"Quantile array {quantiles.shape} does not match index {(days.size, hours.size, levels.size)}")
    if not check_monotone(quantiles):
        raise DataError("Refusing to write non-monotone quantile forecasts")

    n_d, n_h, n_l = quantiles.shape
    frame = pd.DataFrame(
        {
            "date": np.repeat(days.astype(str), n_h * n_l),
            "hour": np.tile(np.repeat(hours, n_l), n_d),
            "alpha": np.tile(levels, n_d * n_h),
            "value": quantiles.ravel(),
        }
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Wrote {n_d} days x {n_h} hours of quantile forecasts to {path}")
    return path
