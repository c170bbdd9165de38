"""
Training objective for the distributional network.

Binary cross-entropy averaged over rows and probability levels, plus a
ReLU penalty on decreasing adjacent outputs. The penalty is a raw double
sum and is not normalized by the number of rows.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

PROB_EPS = 1e-7


@dataclass(frozen=True)
class LossBreakdown:
    """Components of the training loss."""

    bce: float
    penalty: float
    total: float
    lambda_m: float


def _check_inputs(preds: np.ndarray, targets: np.ndarray) -> None:
    if preds.ndim != 2 or preds.shape != targets.shape:
        raise DataError(f"Shape mismatch: preds {preds.shape} vs targets {targets.shape}")
    if preds.shape[1] < 2:
        raise DataError(f"Need at least 2 probability levels, got {preds.shape[1]}")
    if not np.all((targets == 0) | (targets == 1)):
        raise DataError("Targets must be 0 or 1")


def bce_monotone_loss(preds: np.ndarray, targets: np.ndarray, lambda_m: float) -> LossBreakdown:
    """
    Evaluate the loss on a batch.

    Args:
        preds: T x k predicted probabilities
        targets: T x k binary indicators
        lambda_m: Monotonicity penalty weight

    Returns:
        LossBreakdown with bce, penalty and total
    """
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    _check_inputs(preds, targets)

    g = np.clip(preds, PROB_EPS, 1.0 - PROB_EPS)
    log_terms = targets * np.log(g) + (1.0 - targets) * np.log1p(-g)
    bce = float(-log_terms.mean())

    violations = np.maximum(preds[:, :-1] - preds[:, 1:], 0.0)
    penalty = float(lambda_m * violations.sum())

    return LossBreakdown(bce=bce, penalty=penalty, total=bce + penalty, lambda_m=float(lambda_m))


def loss_gradient(preds: np.ndarray, targets: np.ndarray, lambda_m: float) -> np.ndarray:
    """
    Gradient of the loss with respect to the predictions.

    Ties between adjacent predictions contribute a zero subgradient.
    """
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    _check_inputs(preds, targets)

    n_rows, k = preds.shape
    g = np.clip(preds, PROB_EPS, 1.0 - PROB_EPS)
    grad = (g - targets) / (n_rows * k * g * (1.0 - g))

    if lambda_m != 0.0:
        violating = (preds[:, :-1] - preds[:, 1:]) > 0.0
        grad[:, :-1] += lambda_m * violating
        grad[:, 1:] -= lambda_m * violating

    return grad
