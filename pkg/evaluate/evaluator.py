"""
Main evaluator module: CRPS tables and Diebold-Mariano comparisons across models.
"""

import logging
from itertools import permutations
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from epf.dataio import PricePanel
from epf.errors import DataError
from epf.parallel import run_parallel

from .config import EvaluationConfig, Subperiod
from .loader import EvalReport, ForecastLoader, ForecastSet, combine_forecasts, common_index, group_runs
from .metrics import INDETERMINATE, TAIL_LEVELS, DmResult, LossPanel, dm_test, loss_panel

logger = logging.getLogger(__name__)

NOT_AVAILABLE = "n/a"


def realized_prices(panel: PricePanel, dates: np.ndarray, hours: Sequence[int]) -> np.ndarray:
    """Days x hours realized prices for the given dates."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    rows = np.searchsorted(panel.days, dates)
    if np.any(rows >= panel.n_days) or not np.array_equal(panel.days[np.minimum(rows, panel.n_days - 1)], dates):
        raise DataError("Realized prices are missing for some forecast dates")
    return panel.prices[np.ix_(rows, np.asarray(hours, dtype=int) - 1)]


def _dm_task(task: Tuple[LossPanel, LossPanel, str, str]) -> Union[DmResult, Dict[int, DmResult], str]:
    a, b, mode, sided = task
    try:
        return dm_test(a, b, mode, sided)
    except DataError as e:
        return f"{NOT_AVAILABLE}: {e}"


class ForecastEvaluator:
    """Evaluate quantile forecast files against realized prices."""

    def __init__(self, config: Optional[EvaluationConfig] = None):
        """
        Initialize the evaluator.

        Args:
            config: Evaluation settings (defaults if None)
        """
        self.config = config or EvaluationConfig()
        self.console = Console()

    def collapse_runs(self, forecasts: Dict[str, ForecastSet], prices_for) -> Tuple[Dict[str, ForecastSet], Dict[str, Any]]:
        """
        Replace groups of run files by their best run and their average.

        The best run has the lowest overall CRPS on the group's common index.
        """
        groups = group_runs(forecasts, self.config.run_pattern)
        if not groups:
            return dict(forecasts), {}

        grouped = {r.model for runs in groups.values() for r in runs}
        collapsed = {name: f for name, f in forecasts.items() if name not in grouped}
        info: Dict[str, Any] = {}
        for model, runs in groups.items():
            dates, hours = common_index(runs)
            aligned = [r.restrict(dates, hours) for r in runs]
            prices = prices_for(dates, hours)
            scores = [loss_panel(r.model, dates, hours, r.values, prices).mean() for r in aligned]
            best = int(np.argmin(scores))
            collapsed[f"{model}_run"] = aligned[best].renamed(f"{model}_run")
            if len(aligned) > 1:
                collapsed[f"{model}_avg"] = combine_forecasts(aligned, f"{model}_avg")
            info[model] = {
                "n_runs": len(runs),
                "best": aligned[best].model,
                "best_crps": float(scores[best]),
                "run_crps": {r.model: float(s) for r, s in zip(aligned, scores)},
            }
            logger.info(f"{model}: best of {len(runs)} runs is {aligned[best].model} (CRPS {scores[best]:.4f})")
        return collapsed, info

    def build_report(
        self,
        forecasts: Dict[str, ForecastSet],
        panel: PricePanel,
        subperiods: Optional[Sequence[Subperiod]] = None,
    ) -> EvalReport:
        """
        Compute every report table from loaded forecasts.

        Args:
            forecasts: Model name -> forecasts
            panel: Panel holding the realized prices
            subperiods: Reporting periods (config subperiods if None)

        Returns:
            EvalReport with CRPS, tail CRPS, per-hour CRPS and DM tables
        """
        if not forecasts:
            raise DataError("No forecasts to evaluate")
        subperiods = list(self.config.subperiods if subperiods is None else subperiods)

        def prices_for(dates, hours):
            return realized_prices(panel, dates, hours)

        forecasts, runs = self.collapse_runs(forecasts, prices_for)
        models = sorted(forecasts)
        dates, hours = common_index([forecasts[m] for m in models])
        for m in models:
            if forecasts[m].dates.size != dates.size or len(forecasts[m].hours) != len(hours):
                logger.warning(f"{m}: evaluated on the common range of {dates.size} days x {len(hours)} hours only")
        aligned = {m: forecasts[m].restrict(dates, hours) for m in models}
        prices = prices_for(dates, hours)

        losses = {m: loss_panel(m, dates, hours, aligned[m].values, prices) for m in models}
        tails = {m: loss_panel(m, dates, hours, aligned[m].values, prices, subset=TAIL_LEVELS) for m in models}

        periods = [(p.name, p.contains(dates)) for p in subperiods]
        periods = [(name, mask) for name, mask in periods if mask.any()]
        periods.append(("overall", np.ones(dates.size, dtype=bool)))

        def table(panels: Dict[str, LossPanel]) -> pd.DataFrame:
            frame = pd.DataFrame({name: [panels[m].mean(mask) for m in models] for name, mask in periods}, index=models)
            frame.index.name = "model"
            return frame

        per_hour = pd.DataFrame({m: losses[m].per_hour() for m in models}, index=pd.Index(hours, name="hour"))

        results: Dict[str, Any] = {
            "summary": {
                "n_models": len(models),
                "n_days": int(dates.size),
                "n_hours": len(hours),
                "first_day": str(dates[0]),
                "last_day": str(dates[-1]),
                "dm_sided": self.config.dm_sided,
                "subperiods": [name for name, _ in periods],
            },
            "crps": table(losses),
            "crps_tails": table(tails),
            "per_hour": per_hour,
            "runs": runs,
            "losses": losses,
        }

        if len(models) > 1:
            results.update(self._dm_tables(models, losses))
        return EvalReport(results)

    def _dm_tables(self, models: List[str], losses: Dict[str, LossPanel]) -> Dict[str, pd.DataFrame]:
        pairs = list(permutations(models, 2))
        sided = self.config.dm_sided
        daily = run_parallel(_dm_task, [(losses[a], losses[b], "daily", sided) for a, b in pairs], self.config.workers, desc="DM")

        p_values = pd.DataFrame(np.nan, index=pd.Index(models, name="model"), columns=models)
        labels = pd.DataFrame("", index=pd.Index(models, name="model"), columns=models)
        for (a, b), outcome in zip(pairs, daily):
            if isinstance(outcome, str):
                labels.loc[a, b] = NOT_AVAILABLE
                logger.warning(f"DM {a} vs {b}: {outcome}")
            elif outcome.indeterminate:
                labels.loc[a, b] = INDETERMINATE
                logger.warning(f"DM {a} vs {b}: zero long-run variance, indeterminate")
            else:
                p_values.loc[a, b] = outcome.p_value
                labels.loc[a, b] = outcome.label()
        tables = {"dm_daily": p_values, "dm_daily_labels": labels}

        if self.config.per_hour_dm:
            hourly = run_parallel(_dm_task, [(losses[a], losses[b], "hourly", sided) for a, b in pairs], self.config.workers, desc="DM per hour")
            rows = []
            for (a, b), outcome in zip(pairs, hourly):
                if isinstance(outcome, str):
                    rows.extend({"tested": a, "reference": b, "hour": h, "statistic": np.nan, "p_value": np.nan, "label": NOT_AVAILABLE} for h in losses[a].hours)
                    continue
                for h, result in outcome.items():
                    rows.append(
                        {
                            "tested": a,
                            "reference": b,
                            "hour": h,
                            "statistic": result.statistic,
                            "p_value": result.p_value,
                            "label": result.label(),
                        }
                    )
            tables["dm_hourly"] = pd.DataFrame(rows).set_index(["tested", "reference", "hour"])
        return tables

    def print_summary(self, report: EvalReport):
        """Print the CRPS table to the console."""
        crps = report.crps
        table = Table(title="Mean CRPS")
        table.add_column("Model", style="bold")
        for column in crps.columns:
            table.add_column(str(column), justify="right")
        best = crps.idxmin(axis=0)
        for model, row in crps.iterrows():
            cells = []
            for column, value in row.items():
                text = "-" if np.isnan(value) else f"{value:.3f}"
                cells.append(f"[green]{text}[/green]" if best[column] == model else text)
            table.add_row(str(model), *cells)
        self.console.print(table)

    def run_evaluation(
        self,
        panel: PricePanel,
        forecast_source: Optional[Union[str, Path, Sequence[Union[str, Path]]]] = None,
        output_dir: Optional[str] = None,
        subperiods: Optional[Sequence[Subperiod]] = None,
    ) -> EvalReport:
        """
        Load forecasts, evaluate them and write the report files.

        Args:
            panel: Panel with realized prices
            forecast_source: Directory or list of forecast CSVs (config forecast_dir if None)
            output_dir: Report directory (config output_directory if None)
            subperiods: Reporting periods

        Returns:
            The EvalReport
        """
        source = forecast_source or self.config.forecast_dir
        loader = ForecastLoader(source, self.config.monotone_tolerance)
        forecasts = loader.load_and_validate(self.config.models)
        report = self.build_report(forecasts, panel, subperiods)

        output_dir = Path(output_dir or self.config.output_directory)
        output_dir.mkdir(parents=True, exist_ok=True)
        report.save_report(str(output_dir / "report.txt"))
        if self.config.save_detailed_results:
            report.save_csv(output_dir)
            report.save_json_report(str(output_dir / "report.json"))

        if self.config.verbose_output:
            print(report.generate_summary_report())
        else:
            self.print_summary(report)
        return report
