"""
Probabilistic day-ahead electricity price forecasting.

A multi-output network predicts the conditional CDF of each hour's price at
fixed unconditional-quantile support points; the CDF is made monotone,
interpolated and inverted into 99 quantiles. Naive and quantile-regression
benchmarks, hyperparameter search and a rolling backtest complete the
toolkit.
"""

__version__ = "0.1.0"
