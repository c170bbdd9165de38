"""
Evaluate package for probabilistic price forecasts.

This package scores quantile forecasts with the pinball loss and CRPS, and
compares models with Diebold-Mariano tests.
"""

from .config import EvaluationConfig, Subperiod
from .metrics import LossPanel, DmResult, crps, dm_test, pinball

__all__ = [
    "EvaluationConfig",
    "Subperiod",
    "LossPanel",
    "DmResult",
    "crps",
    "dm_test",
    "pinball",
]
