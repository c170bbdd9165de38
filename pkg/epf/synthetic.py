"""
Synthetic panels with Gaussian conditional prices.

The conditional mean and standard deviation of p_{t,h} depend on the
previous day's price of the same hour and on the load forecast, so the
true predictive quantiles are known in closed form. Allowance and fuel
prices are persistent but mean-reverting series that do not enter the
price equation.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.signal import lfilter
from scipy.stats import norm

from .cdftools import LEVELS_99
from .dataio import HOURS, PricePanel


@dataclass(frozen=True)
class SyntheticPanel:
    """A generated panel with its true conditional moments."""

    panel: PricePanel
    means: np.ndarray
    sds: np.ndarray

    def oracle_quantiles(self, days: Sequence[int], hours: Sequence[int], levels: Sequence[float] = LEVELS_99) -> np.ndarray:
        """True predictive quantiles, days x hours x levels."""
        days = np.asarray(days, dtype=int)
        cols = np.asarray(hours, dtype=int) - 1
        z = norm.ppf(np.asarray(levels, dtype=float))
        mu = self.means[np.ix_(days, cols)]
        sd = self.sds[np.ix_(days, cols)]
        return mu[:, :, None] + sd[:, :, None] * z[None, None, :]


def _mean_reverting(rng: np.random.Generator, sd: float, n: int, phi: float = 0.98) -> np.ndarray:
    """AR(1) deviations from a fixed level."""
    return lfilter([1.0], [1.0, -phi], rng.normal(0.0, sd, size=n))


def generate_panel(n_days: int, seed: int = 0, start: str = "2015-01-01") -> SyntheticPanel:
    """
    Generate a panel of n_days days.

    p_{t,h} ~ N(mu, sd^2) with mu = 20 + 0.5 p_{t-1,h} + 0.4 (load - 50)
    and sd = 1.5 + 0.1 |load - 50| + 0.05 |p_{t-1,h} - 40|.
    """
    rng = np.random.default_rng(seed)
    days = pd.date_range(start, periods=n_days, freq="D").to_numpy(dtype="datetime64[D]")
    hours = np.arange(HOURS)
    weekday = pd.DatetimeIndex(days).dayofweek.to_numpy()

    daily = 50.0 + 8.0 * np.sin(2 * np.pi * hours / HOURS)[None, :] - 4.0 * (weekday[:, None] >= 5)
    load = daily + rng.normal(0.0, 6.0, size=(n_days, HOURS))
    res = np.clip(12.0 + 6.0 * np.sin(np.pi * (hours - 6) / 12)[None, :] + rng.normal(0.0, 3.0, size=(n_days, HOURS)), 0.0, None)
    eua = 25.0 + _mean_reverting(rng, 0.3, n_days)
    coal = 80.0 + _mean_reverting(rng, 0.5, n_days)
    gas = 20.0 + _mean_reverting(rng, 0.2, n_days)
    oil = 60.0 + _mean_reverting(rng, 0.4, n_days)

    prices = np.empty((n_days, HOURS))
    means = np.empty((n_days, HOURS))
    sds = np.empty((n_days, HOURS))
    previous = np.full(HOURS, 40.0)
    for t in range(n_days):
        mu = 20.0 + 0.5 * previous + 0.4 * (load[t] - 50.0)
        sd = 1.5 + 0.1 * np.abs(load[t] - 50.0) + 0.05 * np.abs(previous - 40.0)
        prices[t] = mu + sd * rng.standard_normal(HOURS)
        means[t] = mu
        sds[t] = sd
        previous = prices[t]

    panel = PricePanel(
        days=days,
        prices=prices,
        load_fc=load,
        res_fc=res,
        eua=eua,
        coal=coal,
        gas=gas,
        oil=oil,
    )
    return SyntheticPanel(panel=panel, means=means, sds=sds)
