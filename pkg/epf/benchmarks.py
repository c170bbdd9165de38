"""
Benchmark models: calendar naive forecasts with bootstrap or Gaussian bands,
the LASSO-estimated autoregressive point model (LEAR), and quantile
regression post-processing of its point forecasts (QRA and QRM).
"""

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.stats import norm
from sklearn.linear_model import Lasso, QuantileRegressor, lasso_path
from sklearn.model_selection import KFold
from sklearn.preprocessing import StandardScaler

from .cdftools import LEVELS_99
from .dataio import HOURS, MIN_HISTORY, PricePanel, build_lear_matrix
from .errors import ConvergenceError, DataError, DegenerateScaleError, EpfError, InsufficientHistoryError
from .parallel import run_parallel
from .transform import TransformState, asinh_forward, asinh_inverse, fit_transform_state

logger = logging.getLogger(__name__)

LEAR_WINDOWS = (56, 84, 1092, 1456)
LEAR_CV_RULES = ("min", "1se")
NAIVE_LAG7_WEEKDAYS = (1, 6, 7)  # Monday, Saturday, Sunday


@dataclass(frozen=True)
class PointForecastSet:
    """LEAR point forecasts: values[d, h, w] for day days[d], hour hours[h], window windows[w]."""

    days: np.ndarray
    dates: np.ndarray
    hours: Tuple[int, ...]
    windows: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        expected = (len(self.days), len(self.hours), len(self.windows))
        if self.values.shape != expected:
            raise DataError(f"Point forecasts of shape {self.values.shape}, expected {expected}")
        if len(set(self.windows)) != len(self.windows):
            raise DataError(f"Duplicate window tags: {self.windows}")

    def rows_for(self, days: Sequence[int]) -> np.ndarray:
        """Positions of panel day indices within this set."""
        lookup = {int(d): i for i, d in enumerate(self.days)}
        missing = [int(d) for d in days if int(d) not in lookup]
        if missing:
            raise DataError(f"Point forecasts missing for day indices {missing[:5]}")
        return np.array([lookup[int(d)] for d in days], dtype=int)

    def to_frame(self) -> pd.DataFrame:
        n_d, n_h, _ = self.values.shape
        frame = pd.DataFrame(
            {
                "date": np.repeat(self.dates.astype(str), n_h),
                "hour": np.tile(np.asarray(self.hours), n_d),
            }
        )
        for i, w in enumerate(self.windows):
            frame[f"p{w}"] = self.values[:, :, i].ravel()
        return frame

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.12g")
        logger.info(f"Wrote LEAR point forecasts ({len(self.days)} days, windows {self.windows}) to {path}")
        return path


@dataclass(frozen=True)
class LearFit:
    """LASSO fit at the selected shrinkage level."""

    coef: np.ndarray
    intercept: float
    alpha: float
    alphas: Optional[np.ndarray] = None
    cv_errors: Optional[np.ndarray] = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept


# ---------------------------------------------------------------------------
# Naive models
# ---------------------------------------------------------------------------


def naive_points(panel: PricePanel, days: Sequence[int]) -> np.ndarray:
    """Naive point forecasts for whole days: len(days) x 24."""
    days = np.atleast_1d(np.asarray(days, dtype=int))
    if days.size and days.min() < MIN_HISTORY:
        raise InsufficientHistoryError(
            f"Naive forecast for day index {days.min()} needs {MIN_HISTORY} days of history",
            str(panel.days[MIN_HISTORY]) if panel.n_days > MIN_HISTORY else None,
        )
    weekly = np.isin(panel.weekday[days], NAIVE_LAG7_WEEKDAYS)
    lag = np.where(weekly, 7, 1)
    return panel.prices[days - lag]


def naive_point(panel: PricePanel, t: int, h: int) -> float:
    """p_{t-7,h} on Monday, Saturday and Sunday, p_{t-1,h} otherwise."""
    return float(naive_points(panel, [t])[0, h - 1])


def naive_errors(panel: PricePanel, t: int, window: int) -> np.ndarray:
    """Realized naive errors for the days in [t - window, t) that have enough history."""
    start = max(MIN_HISTORY, t - window)
    days = np.arange(start, t)
    if days.size == 0:
        raise DataError(f"No naive errors available before day index {t}")
    return panel.prices[days] - naive_points(panel, days)


def naive_b_forecast(panel: PricePanel, t: int, h: int, window: int = 182, draws: int = 5000, seed: int = 0) -> np.ndarray:
    """
    Naive forecast with bootstrapped errors of the same hour.

    Returns:
        99 empirical quantiles of point + resampled errors
    """
    errors = naive_errors(panel, t, window)[:, h - 1]
    rng = np.random.default_rng([int(seed), int(t), int(h)])
    sample = naive_point(panel, t, h) + rng.choice(errors, size=draws, replace=True)
    return np.quantile(sample, LEVELS_99)


def naive_1n_forecast(panel: PricePanel, t: int, h: int, window: int = 182) -> np.ndarray:
    """Naive forecast with a Gaussian band scaled by the windowed error standard deviation."""
    if t - window < MIN_HISTORY:
        raise InsufficientHistoryError(
            f"Naive-1N for day index {t} needs {window} errors",
            str(panel.days[MIN_HISTORY + window]) if panel.n_days > MIN_HISTORY + window else None,
        )
    errors = naive_errors(panel, t, window)[:, h - 1]
    sigma = float(np.std(errors, ddof=1))
    return naive_point(panel, t, h) + sigma * norm.ppf(LEVELS_99)


# ---------------------------------------------------------------------------
# LEAR
# ---------------------------------------------------------------------------


def lasso_alpha_grid(X: np.ndarray, y: np.ndarray, n_lambdas: int = 100, decades: float = 4.0) -> np.ndarray:
    """Log-spaced shrinkage grid from the smallest value zeroing all slopes."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    alpha_max = np.max(np.abs(Xc.T @ yc)) / X.shape[0]
    if alpha_max <= 0:
        alpha_max = 1e-12
    return alpha_max * np.logspace(0.0, -decades, n_lambdas)


def lasso_fit(X: np.ndarray, y: np.ndarray, alpha: float, tol: float = 1e-10, max_iter: int = 100_000) -> LearFit:
    """Coordinate-descent LASSO with intercept at a fixed shrinkage level."""
    model = Lasso(alpha=alpha, fit_intercept=True, tol=tol, max_iter=max_iter)
    model.fit(X, y)
    return LearFit(coef=model.coef_.copy(), intercept=float(model.intercept_), alpha=float(alpha))


def lear_fit(
    X: np.ndarray, y: np.ndarray, n_lambdas: int = 100, folds: int = 7, tol: float = 1e-8, rule: str = "min"
) -> LearFit:
    """
    LASSO with the shrinkage level chosen by K-fold cross-validation.

    Args:
        X: Standardized regressors
        y: Targets (asinh-scale prices)
        n_lambdas: Grid size
        folds: Number of contiguous CV folds
        rule: 'min' takes the lowest CV error; '1se' the largest shrinkage
            whose mean fold error is within one standard error of it

    Raises:
        DataError: too few rows, a design without variation or an unknown rule
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if rule not in LEAR_CV_RULES:
        raise DataError(f"Unknown CV rule '{rule}'; choose from {LEAR_CV_RULES}")
    if n < 2 * folds:
        raise DataError(f"LEAR needs at least {2 * folds} rows, got {n}")
    if np.ptp(y) == 0.0:
        return LearFit(coef=np.zeros(p), intercept=float(y[0]), alpha=float("inf"))
    if not np.any(np.ptp(X, axis=0) > 0):
        raise DataError("LEAR design has rank 0")

    alphas = lasso_alpha_grid(X, y, n_lambdas)
    errors = np.zeros(alphas.size)
    fold_mse = np.zeros((folds, alphas.size))
    for f, (train_idx, test_idx) in enumerate(KFold(n_splits=folds).split(X)):
        x_mean = X[train_idx].mean(axis=0)
        y_mean = y[train_idx].mean()
        _, coefs, _ = lasso_path(
            X[train_idx] - x_mean, y[train_idx] - y_mean, alphas=alphas, tol=tol, max_iter=50_000
        )
        pred = (X[test_idx] - x_mean) @ coefs + y_mean
        squared = (y[test_idx][:, None] - pred) ** 2
        errors += squared.sum(axis=0)
        fold_mse[f] = squared.mean(axis=0)

    best = int(np.argmin(errors))
    if rule == "1se":
        mean_mse = fold_mse.mean(axis=0)
        se = np.std(fold_mse[:, best], ddof=1) / np.sqrt(folds)
        best = int(np.flatnonzero(mean_mse <= mean_mse[best] + se)[0])
    fit = lasso_fit(X, y, alphas[best])
    logger.debug(f"LEAR: alpha={alphas[best]:.3e} ({best + 1}/{alphas.size}), {np.count_nonzero(fit.coef)} active")
    return LearFit(coef=fit.coef, intercept=fit.intercept, alpha=fit.alpha, alphas=alphas, cv_errors=errors)


def _window_state(prices: np.ndarray) -> TransformState:
    try:
        return fit_transform_state(prices)
    except DegenerateScaleError:
        logger.warning("Degenerate LEAR window, using unit scale")
        return TransformState(median=float(np.median(prices)), mad_scaled=1.0)


def _with_context(error: EpfError, context: str) -> EpfError:
    wrapped = (DataError if isinstance(error, DataError) else ConvergenceError)(f"{context}: {error}")
    wrapped.__cause__ = error
    return wrapped


def _lear_task(task: Tuple[PricePanel, int, int, Tuple[int, ...], int, int, str]) -> np.ndarray:
    panel, t, window, hours, n_lambdas, folds, rule = task
    start = t - window
    if start < MIN_HISTORY:
        raise InsufficientHistoryError(
            f"LEAR window {window} for day {panel.days[t]} starts before the first feasible day",
            str(panel.days[MIN_HISTORY + window]) if panel.n_days > MIN_HISTORY + window else None,
        )
    cal_days = np.arange(start, t)
    state = _window_state(panel.prices[cal_days])
    transformed = panel.with_prices(asinh_forward(state, panel.prices))
    X = build_lear_matrix(transformed, cal_days)
    x_new = build_lear_matrix(transformed, [t])
    scaler = StandardScaler().fit(X)
    Xs = scaler.transform(X)
    xs = scaler.transform(x_new)

    out = np.empty(len(hours))
    for i, h in enumerate(hours):
        try:
            fit = lear_fit(Xs, transformed.prices[cal_days, h - 1], n_lambdas, folds, rule=rule)
        except EpfError as e:
            raise _with_context(e, f"LEAR day {panel.days[t]}, hour {h}, window {window}") from e
        out[i] = asinh_inverse(state, fit.predict(xs)[0])
    return out


def lear_point_forecasts(
    panel: PricePanel,
    days: Sequence[int],
    windows: Sequence[int] = LEAR_WINDOWS,
    hours: Sequence[int] = tuple(range(1, HOURS + 1)),
    n_lambdas: int = 100,
    folds: int = 7,
    workers: Optional[int] = None,
    cv_rule: str = "min",
) -> PointForecastSet:
    """
    Rolling LEAR point forecasts, one per calibration window.

    Args:
        panel: Source panel
        days: Day indices to forecast
        windows: Calibration window lengths in days
        hours: Hours 1..24 to forecast
        n_lambdas: Shrinkage grid size
        folds: CV folds
        workers: Process count
        cv_rule: Shrinkage selection rule, see lear_fit

    Returns:
        PointForecastSet in price units
    """
    days = np.asarray(days, dtype=int)
    windows = tuple(int(w) for w in windows)
    hours = tuple(int(h) for h in hours)
    tasks = [(panel, int(t), w, hours, n_lambdas, folds, cv_rule) for t in days for w in windows]
    results = run_parallel(_lear_task, tasks, workers, desc="LEAR")
    values = np.asarray(results, dtype=float).reshape(days.size, len(windows), len(hours)).transpose(0, 2, 1)
    return PointForecastSet(days=days, dates=panel.days[days], hours=hours, windows=windows, values=values)


# ---------------------------------------------------------------------------
# Quantile regression
# ---------------------------------------------------------------------------


def qr_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, alpha: float) -> float:
    """Sum of pinball losses of the linear predictor."""
    r = y - X @ beta
    return float(np.sum(r * (alpha - (r < 0))))


def _weighted_solve(X: np.ndarray, y: np.ndarray, w: np.ndarray, shift: np.ndarray) -> np.ndarray:
    A = X.T @ (w[:, None] * X)
    b = X.T @ (w * y) + shift
    return linalg.lstsq(A, b, cond=1e-13)[0]


def _start_basis(X: np.ndarray, y: np.ndarray, beta: np.ndarray, alpha: float, extra: int = 2) -> Optional[np.ndarray]:
    """Best exact-interpolation basis among the rows with the smallest residuals."""
    n, p = X.shape
    candidates: List[int] = []
    seen = set()
    for i in np.argsort(np.abs(y - X @ beta), kind="stable"):
        key = (X[i].tobytes(), y[i].tobytes())
        if key in seen:
            continue
        seen.add(key)
        candidates.append(int(i))
        if len(candidates) == p + extra:
            break
    best_basis = None
    best_obj = np.inf
    for basis in itertools.combinations(candidates, p):
        rows = np.sort(np.asarray(basis))
        XB = X[rows]
        if np.linalg.cond(XB) > 1e12:
            continue
        obj = qr_objective(X, y, np.linalg.solve(XB, y[rows]), alpha)
        if obj < best_obj:
            best_obj, best_basis = obj, rows
    return best_basis


def _edge_slopes(dr: np.ndarray, above: np.ndarray, below: np.ndarray, alpha: float) -> np.ndarray:
    """Right derivatives of the objective along each column of residual changes."""
    rate = np.maximum(alpha * dr, (alpha - 1.0) * dr)
    rate = np.where(above[:, None], alpha * dr, rate)
    rate = np.where(below[:, None], (alpha - 1.0) * dr, rate)
    return rate.sum(axis=0)


def _vertex_descent(
    X: np.ndarray, y: np.ndarray, basis: np.ndarray, alpha: float, max_pivots: int
) -> Tuple[Optional[np.ndarray], bool]:
    """
    Exact descent over interpolation vertices of the pinball objective.

    From a vertex fitting the basis rows exactly, each edge frees one basis
    row in one direction. The steepest improving edge is followed to the
    breakpoint where the slope turns non-negative, and the row found there
    replaces the freed one. At a vertex with no improving edge and no other
    zero residual the objective is at its minimum.

    Returns:
        (coefficients, certified). Coefficients are None when the basis
        turned singular, the pivot cap was hit or an edge was unbounded.
    """
    p = X.shape[1]
    basis = np.array(basis, dtype=int)
    zero = 1e-10 * (1.0 + float(np.max(np.abs(y))))
    for _ in range(max_pivots):
        XB = X[basis]
        if np.linalg.cond(XB) > 1e12:
            return None, False
        inv = linalg.inv(XB)
        beta = inv @ y[basis]
        r = y - X @ beta
        r[basis] = 0.0
        G = X @ inv
        G[basis] = np.eye(p)

        above, below = r > zero, r < -zero
        flat = ~(above | below)
        slopes = np.concatenate([_edge_slopes(G, above, below, alpha), _edge_slopes(-G, above, below, alpha)])
        scale = np.tile(1.0 + np.abs(G).sum(axis=0), 2)
        best = int(np.argmin(slopes / scale))
        if slopes[best] >= -1e-12 * scale[best]:
            degenerate = int(flat.sum()) > p
            return beta, not degenerate

        k, sign = best % p, (1.0 if best < p else -1.0)
        dr = sign * G[:, k]
        crossing = np.flatnonzero(~flat & (r * dr < 0))
        if crossing.size == 0:
            return None, False
        steps = -r[crossing] / dr[crossing]
        order = np.argsort(steps, kind="stable")
        slope = slopes[best] + np.cumsum(np.abs(dr[crossing[order]]))
        stop = np.flatnonzero(slope >= 0)
        if stop.size == 0:
            return None, False
        basis[k] = crossing[order[stop[0]]]
    return None, False


def _highs_fit(X: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    model = QuantileRegressor(quantile=alpha, alpha=0.0, fit_intercept=False, solver="highs")
    return model.fit(X, y).coef_.copy()


def quantile_regression_fit(
    X: np.ndarray,
    y: np.ndarray,
    alpha: float,
    solver: str = "irls",
    max_iter: int = 2000,
    tol: float = 1e-10,
    eps_min: float = 1e-8,
) -> np.ndarray:
    """
    Linear quantile regression (X already holds any intercept column).

    The default solver runs iteratively reweighted least squares on a
    smoothed pinball loss, shrinking the smoothing level tenfold down to
    eps_min. The nearest exact-fit vertex then starts a pivoting descent
    that ends at an optimal vertex; when optimality cannot be certified
    (degenerate vertices, singular bases) the linear program decides. The
    'highs' solver delegates to the linear program in scikit-learn.

    Raises:
        DataError: rows <= columns or alpha outside (0, 1)
        ConvergenceError: iteration cap hit before the smallest smoothing level
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"Design of shape {X.shape} does not match {y.shape[0]} targets")
    n, p = X.shape
    if n <= p:
        raise DataError(f"Quantile regression is under-determined: {n} rows for {p} columns")
    if not 0.0 < alpha < 1.0:
        raise DataError(f"Quantile level must be in (0, 1), got {alpha}")

    if solver == "highs":
        return _highs_fit(X, y, alpha)
    if solver != "irls":
        raise DataError(f"Unknown quantile regression solver '{solver}'")

    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    scale = float(np.std(y)) or 1.0
    eps = max(0.1 * scale, eps_min)
    shift = (alpha - 0.5) * X.sum(axis=0)
    change = np.inf
    level_iters = 0

    for iteration in range(1, max_iter + 1):
        r = y - X @ beta
        w = 0.5 / np.maximum(np.abs(r), eps)
        new_beta = _weighted_solve(X, y, w, shift)
        if not np.all(np.isfinite(new_beta)):
            raise ConvergenceError(
                "Quantile regression produced non-finite coefficients",
                {"iterations": iteration, "alpha": alpha, "eps": eps},
            )
        change = float(np.max(np.abs(new_beta - beta)) / (1.0 + np.max(np.abs(beta))))
        beta = new_beta
        level_iters += 1
        if change < tol or level_iters >= 50:
            if eps <= eps_min:
                break
            eps = max(eps * 0.1, eps_min)
            level_iters = 0
    else:
        raise ConvergenceError(
            "Quantile regression did not converge",
            {"iterations": max_iter, "alpha": alpha, "eps": eps, "last_change": change},
        )

    basis = _start_basis(X, y, beta, alpha)
    vertex, certified = (None, False) if basis is None else _vertex_descent(X, y, basis, alpha, 10 * n + 50)
    if certified:
        return vertex

    logger.debug(f"Vertex descent left no certified optimum at alpha={alpha}; checking the linear program")
    candidates = [b for b in (vertex, beta, _highs_fit(X, y, alpha)) if b is not None]
    return min(candidates, key=lambda b: qr_objective(X, y, b, alpha))


def _qr_day_task(task: Tuple[np.ndarray, np.ndarray, np.ndarray, Tuple[float, ...], str]) -> np.ndarray:
    X_cal, y_cal, x_new, levels, solver = task
    out = np.array([x_new @ quantile_regression_fit(X_cal, y_cal, a, solver) for a in levels])
    return np.sort(out)


def _qr_forecast(
    regressors: np.ndarray,
    points: PointForecastSet,
    prices: np.ndarray,
    days: Sequence[int],
    calib: int,
    levels: Sequence[float],
    solver: str,
    workers: Optional[int],
) -> np.ndarray:
    days = np.asarray(days, dtype=int)
    levels = tuple(float(a) for a in levels)
    tasks = []
    for t in days:
        cal_rows = points.rows_for(range(t - calib, t))
        test_row = points.rows_for([t])[0]
        for j, h in enumerate(points.hours):
            X_cal = np.column_stack([np.ones(calib), regressors[cal_rows, j]])
            x_new = np.concatenate([[1.0], regressors[test_row, j]])
            tasks.append((X_cal, prices[t - calib : t, h - 1], x_new, levels, solver))
    results = run_parallel(_qr_day_task, tasks, workers, desc="quantile regression")
    return np.asarray(results).reshape(days.size, len(points.hours), len(levels))


def qra_forecast(
    points: PointForecastSet,
    prices: np.ndarray,
    days: Sequence[int],
    calib: int = 182,
    levels: Sequence[float] = LEVELS_99,
    solver: str = "irls",
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Quantile regression averaging on all point forecasts.

    Args:
        points: Point forecasts covering the calibration and test days
        prices: Realized prices, panel days x 24
        days: Test day indices
        calib: Calibration window length in days

    Returns:
        days x hours x levels quantiles, sorted along levels
    """
    return _qr_forecast(points.values, points, prices, days, calib, levels, solver, workers)


def qrm_forecast(
    points: PointForecastSet,
    prices: np.ndarray,
    days: Sequence[int],
    calib: int = 182,
    levels: Sequence[float] = LEVELS_99,
    solver: str = "irls",
    workers: Optional[int] = None,
) -> np.ndarray:
    """Quantile regression on the mean of the point forecasts."""
    mean = points.values.mean(axis=2, keepdims=True)
    return _qr_forecast(mean, points, prices, days, calib, levels, solver, workers)
