"""
Exception hierarchy for the forecasting toolkit.

Each top-level family carries the process exit code used by the CLI.
"""

from typing import Any, Dict, List, Optional


class EpfError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(EpfError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class DataError(EpfError):
    """Input data is missing, malformed or too short."""

    exit_code = 3


class SchemaError(DataError):
    """A required column is absent from an input file."""

    def __init__(self, column: str, path: Optional[str] = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"Missing required column '{column}'{where}")


class IngestionError(DataError):
    """A row of an input file could not be ingested."""

    def __init__(self, message: str, row: Optional[int] = None, date: Optional[str] = None):
        self.row = row
        self.date = date
        context = []
        if row is not None:
            context.append(f"row {row}")
        if date is not None:
            context.append(f"date {date}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class InsufficientHistoryError(DataError):
    """Not enough history before a requested day."""

    def __init__(self, message: str, earliest_feasible: Optional[str] = None):
        self.earliest_feasible = earliest_feasible
        if earliest_feasible is not None:
            message = f"{message}; earliest feasible day is {earliest_feasible}"
        super().__init__(message)


class NumericError(EpfError):
    """A numerical procedure failed."""

    exit_code = 4


class DegenerateScaleError(NumericError):
    """A window has no spread to standardize with."""


class NonFiniteError(NumericError):
    """Non-finite activations in a network layer."""

    def __init__(self, layer: int, stage: str = "forward"):
        self.layer = layer
        self.stage = stage
        super().__init__(f"Non-finite values in layer {layer} during {stage} pass")


class TrainingDivergenceError(NumericError):
    """The training loss became non-finite."""

    def __init__(self, epoch: int, loss: float = float("nan")):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        super().__init__(f"{message} [{details}]" if details else message)


class HpoError(NumericError):
    """Every hyperparameter candidate failed."""

    def __init__(self, hour: int, failures: List[str]):
        self.hour = hour
        self.failures = failures
        listing = "; ".join(failures)
        super().__init__(f"All HPO candidates failed for hour {hour}: {listing}")


class RunError(NumericError):
    """A rolling run could not produce forecasts."""
