"""
Variance-stabilizing asinh transform for prices.

Prices are standardized with the window median and the normal-consistent
median absolute deviation, then passed through the area hyperbolic sine.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np
from scipy.stats import median_abs_deviation

from .errors import DegenerateScaleError

logger = logging.getLogger(__name__)

# 75% quantile of the standard normal distribution
Z75 = 0.674489750196082

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class TransformState:
    """Median and scaled MAD of an in-sample price window."""

    median: float
    mad_scaled: float

    def __post_init__(self):
        if not np.isfinite(self.median) or not (self.mad_scaled > 0 and np.isfinite(self.mad_scaled)):
            raise DegenerateScaleError(
                f"Invalid transform state: median={self.median}, mad_scaled={self.mad_scaled}"
            )

    def to_dict(self) -> Dict[str, float]:
        return {"median": float(self.median), "mad_scaled": float(self.mad_scaled)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TransformState":
        return cls(median=float(data["median"]), mad_scaled=float(data["mad_scaled"]))


def fit_transform_state(prices: np.ndarray) -> TransformState:
    """
    Fit the transform on an in-sample window.

    Args:
        prices: Window prices (any shape, flattened)

    Returns:
        TransformState with median and MAD / z(0.75)

    Raises:
        DegenerateScaleError: fewer than two distinct values or zero MAD
    """
    values = np.asarray(prices, dtype=float).ravel()
    if values.size == 0 or np.unique(values).size < 2:
        raise DegenerateScaleError("Transform window needs at least 2 distinct prices")

    median = float(np.median(values))
    mad = float(median_abs_deviation(values, scale=1.0))
    if mad <= 0.0:
        raise DegenerateScaleError(f"Median absolute deviation is zero (median={median})")

    state = TransformState(median=median, mad_scaled=mad / Z75)
    logger.debug(f"Fitted transform state: median={state.median:.4f}, mad_scaled={state.mad_scaled:.4f}")
    return state


def asinh_forward(state: TransformState, p: ArrayLike) -> ArrayLike:
    """Map prices to the asinh scale."""
    u = (np.asarray(p, dtype=float) - state.median) / state.mad_scaled
    return np.arcsinh(u)


def asinh_inverse(state: TransformState, y: ArrayLike) -> ArrayLike:
    """Map asinh-scale values back to prices."""
    return state.median + state.mad_scaled * np.sinh(np.asarray(y, dtype=float))
