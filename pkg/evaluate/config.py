"""
Configuration settings for forecast evaluation.
"""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from epf.errors import ConfigError


@dataclass
class Subperiod:
    """Named inclusive date range used for reporting."""

    name: str
    start: str
    end: str

    def __post_init__(self):
        self.start = str(self.start)
        self.end = str(self.end)
        try:
            start, end = np.datetime64(self.start, "D"), np.datetime64(self.end, "D")
        except ValueError as e:
            raise ConfigError(f"Subperiod {self.name}: invalid date ({e})") from e
        if end < start:
            raise ConfigError(f"Subperiod {self.name}: end {self.end} before start {self.start}")

    def contains(self, days: np.ndarray) -> np.ndarray:
        days = np.asarray(days, dtype="datetime64[D]")
        return (days >= np.datetime64(self.start, "D")) & (days <= np.datetime64(self.end, "D"))


@dataclass
class EvaluationConfig:
    """Configuration class for evaluation settings."""

    # Inputs and outputs
    forecast_dir: str = "forecasts"
    panel_csv: Optional[str] = None
    output_directory: str = "evaluation_results"
    models: Optional[List[str]] = None

    # Reporting
    subperiods: List[Subperiod] = field(default_factory=list)
    dm_sided: str = "one"
    per_hour_dm: bool = True
    run_pattern: str = r"^(?P<model>.+)_run(?P<run>\d+)$"
    monotone_tolerance: float = 0.0

    # Evaluation behavior
    verbose_output: bool = False
    save_detailed_results: bool = True
    workers: int = 1

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self):
        self.subperiods = [s if isinstance(s, Subperiod) else Subperiod(**s) for s in self.subperiods]
        if self.dm_sided not in ("one", "two"):
            raise ConfigError(f"dm_sided must be 'one' or 'two', got {self.dm_sided!r}")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "EvaluationConfig":
        try:
            return cls(**(data or {}))
        except TypeError as e:
            raise ConfigError(f"Invalid evaluation config: {e}") from e

    @classmethod
    def from_yaml(cls, yaml_file: str) -> "EvaluationConfig":
        """Load configuration from YAML file."""
        import yaml

        if not Path(yaml_file).exists():
            raise ConfigError(f"Configuration file not found: {yaml_file}")
        with open(yaml_file, "r") as f:
            config_data = yaml.safe_load(f)

        return cls.from_dict(config_data)

    @classmethod
    def from_env(cls) -> "EvaluationConfig":
        """Load configuration from environment variables."""
        config = cls()

        config.forecast_dir = os.getenv("EPF_FORECAST_DIR", config.forecast_dir)
        config.output_directory = os.getenv("EPF_OUTPUT_DIR", config.output_directory)
        config.verbose_output = os.getenv("EVALUATION_VERBOSE", "false").lower() == "true"
        if os.getenv("EPF_WORKERS"):
            config.workers = int(os.getenv("EPF_WORKERS"))
        config.log_level = os.getenv("LOG_LEVEL", config.log_level)
        config.log_file = os.getenv("LOG_FILE", config.log_file)

        return config

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save_yaml(self, yaml_file: str):
        """Save configuration to YAML file."""
        import yaml

        with open(yaml_file, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, indent=2, sort_keys=False)


# Out-of-sample years on the German day-ahead market
DE_SUBPERIODS = [
    Subperiod("2020", "2019-06-27", "2020-12-31"),
    Subperiod("2021", "2021-01-01", "2021-12-31"),
    Subperiod("2022", "2022-01-01", "2022-12-31"),
    Subperiod("2023", "2023-01-01", "2023-12-31"),
]
