"""
Configuration for ingestion, hyperparameter search, rolling forecasts and benchmarks.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from evaluate.config import DE_SUBPERIODS, EvaluationConfig, Subperiod

from .benchmarks import LEAR_CV_RULES, LEAR_WINDOWS
from .dataio import PanelSchema
from .errors import ConfigError
from .harness import HpoSpace, RollingSettings

logger = logging.getLogger(__name__)


@dataclass
class ForecastConfig:
    """Configuration class for a forecasting experiment."""

    # Data
    panel_csv: Optional[str] = None
    panel_cache: Optional[str] = None
    schema: Dict[str, str] = field(default_factory=dict)
    synthetic_days: int = 800

    # Schedule
    train_val_len: int = 1440
    oos_start: Optional[str] = None
    oos_end: Optional[str] = None
    subperiod_bounds: List[str] = field(default_factory=list)
    calibration_len: int = 182
    hours: List[int] = field(default_factory=lambda: list(range(1, 25)))
    winsor_proportion: float = 0.001

    # Network search and rolling run
    hpo: HpoSpace = field(default_factory=HpoSpace)
    seed: int = 0
    runs: int = 1
    update_epochs: int = 500
    checkpoint_every: int = 50
    grid_n: int = 400

    # Benchmarks
    naive_window: int = 182
    bootstrap_draws: int = 5000
    lear_windows: List[int] = field(default_factory=lambda: list(LEAR_WINDOWS))
    n_lambdas: int = 100
    lear_folds: int = 7
    lear_cv_rule: str = "min"
    qr_solver: str = "irls"

    # Execution and outputs
    workers: Optional[int] = None
    output_directory: str = "epf_results"
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.hpo, dict):
            self.hpo = HpoSpace.from_dict(self.hpo)
        if isinstance(self.evaluation, dict):
            self.evaluation = EvaluationConfig.from_dict(self.evaluation)
        self.subperiod_bounds = [str(b) for b in self.subperiod_bounds]
        self.validate()

    def validate(self):
        if not 0.0 <= self.winsor_proportion < 0.5:
            raise ConfigError(f"winsor_proportion must be in [0, 0.5), got {self.winsor_proportion}")
        if self.train_val_len < 2 or self.calibration_len < 2:
            raise ConfigError("train_val_len and calibration_len must be at least 2 days")
        if not self.hours or any(not 1 <= h <= 24 for h in self.hours):
            raise ConfigError(f"Hours must be within 1..24, got {self.hours}")
        if self.qr_solver not in ("irls", "highs"):
            raise ConfigError(f"qr_solver must be 'irls' or 'highs', got {self.qr_solver!r}")
        if self.lear_cv_rule not in LEAR_CV_RULES:
            raise ConfigError(f"lear_cv_rule must be one of {LEAR_CV_RULES}, got {self.lear_cv_rule!r}")
        if self.runs < 1:
            raise ConfigError(f"runs must be positive, got {self.runs}")
        if not self.lear_windows or any(w < 2 for w in self.lear_windows):
            raise ConfigError(f"Invalid LEAR windows: {self.lear_windows}")
        dates = [d for d in (self.oos_start, *self.subperiod_bounds, self.oos_end) if d is not None]
        try:
            parsed = [np.datetime64(str(d), "D") for d in dates]
        except ValueError as e:
            raise ConfigError(f"Invalid schedule date: {e}") from e
        if any(b < a for a, b in zip(parsed, parsed[1:])):
            raise ConfigError(f"Schedule dates out of order: {dates}")
        PanelSchema.from_dict(self.schema)

    @property
    def panel_schema(self) -> PanelSchema:
        return PanelSchema.from_dict(self.schema)

    @property
    def rolling(self) -> RollingSettings:
        return RollingSettings(
            update_epochs=self.update_epochs,
            checkpoint_every=self.checkpoint_every,
            winsor_proportion=self.winsor_proportion,
            grid_n=self.grid_n,
        )

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "ForecastConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration key(s): {unknown}")
        return cls(**data)

    @classmethod
    def from_yaml(cls, yaml_file: str) -> "ForecastConfig":
        """Load configuration from YAML file."""
        if not Path(yaml_file).exists():
            raise ConfigError(f"Configuration file not found: {yaml_file}")
        with open(yaml_file, "r") as f:
            config_data = yaml.safe_load(f)
        if config_data is not None and not isinstance(config_data, dict):
            raise ConfigError(f"{yaml_file} does not contain a mapping")
        return cls.from_dict(config_data)

    def apply_env(self) -> "ForecastConfig":
        """Override settings from environment variables."""
        if os.getenv("EPF_WORKERS"):
            self.workers = int(os.getenv("EPF_WORKERS"))
        if os.getenv("EPF_SEED"):
            self.seed = int(os.getenv("EPF_SEED"))
        self.output_directory = os.getenv("EPF_OUTPUT_DIR", self.output_directory)
        self.log_level = os.getenv("LOG_LEVEL", self.log_level)
        self.log_file = os.getenv("LOG_FILE", self.log_file)
        return self

    @classmethod
    def from_env(cls) -> "ForecastConfig":
        """Load configuration from environment variables."""
        return cls().apply_env()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hpo"] = self.hpo.to_dict()
        data["evaluation"] = self.evaluation.to_dict()
        return data

    def save_yaml(self, yaml_file: str):
        """Save configuration to YAML file."""
        with open(yaml_file, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, indent=2, sort_keys=False)

    def output_path(self, *parts: str) -> Path:
        """Path of an artifact under the output directory."""
        return Path(self.output_directory).joinpath(*parts)

    def subperiods(self) -> List[Subperiod]:
        """Reporting subperiods: explicit evaluation ones, else derived from the schedule bounds."""
        if self.evaluation.subperiods:
            return list(self.evaluation.subperiods)
        if self.oos_start is None or self.oos_end is None:
            return []
        starts = [self.oos_start, *self.subperiod_bounds]
        ends = [str(np.datetime64(b, "D") - 1) for b in self.subperiod_bounds] + [self.oos_end]
        return [Subperiod(f"P{i + 1}", s, e) for i, (s, e) in enumerate(zip(starts, ends))]


def _synthetic_space() -> HpoSpace:
    return HpoSpace(
        learning_rate=(3e-4, 3e-3),
        dropout=(0.0, 0.2),
        hidden_size=(16, 64),
        activations=("relu", "tanh", "elu", "softplus"),
        n_candidates=8,
        ensembles=2,
    )


# Default configurations for different scenarios
DEFAULT_CONFIGS = {
    "de": lambda: ForecastConfig(
        train_val_len=1440,
        oos_start="2019-06-27",
        oos_end="2023-12-31",
        subperiod_bounds=["2021-01-01", "2022-01-01", "2023-01-01"],
        evaluation=EvaluationConfig(subperiods=list(DE_SUBPERIODS)),
    ),
    "synthetic": lambda: ForecastConfig(
        train_val_len=690,
        oos_start="2016-12-01",
        oos_end="2017-03-10",
        subperiod_bounds=["2017-01-20"],
        hours=[1, 8, 13, 19],
        hpo=_synthetic_space(),
        update_epochs=200,
        bootstrap_draws=2000,
        lear_windows=[56, 84, 364, 450],
        output_directory="synthetic_results",
    ),
}


def get_config(config_name: str = "de") -> ForecastConfig:
    """Get a fresh copy of a predefined configuration."""
    if config_name in DEFAULT_CONFIGS:
        return DEFAULT_CONFIGS[config_name]()
    raise ConfigError(f"Unknown configuration: {config_name}. Available: {list(DEFAULT_CONFIGS.keys())}")


def load_config(config_file: Optional[str] = None, preset: Optional[str] = None) -> ForecastConfig:
    """Load a preset or YAML file and apply environment overrides."""
    if config_file:
        config = ForecastConfig.from_yaml(config_file)
    else:
        config = get_config(preset or "de")
    return config.apply_env()
