"""
Hyperparameter search, rolling forecasts and benchmark orchestration.

The rolling run is split into independent (hour, member) chains. Each
chain fully trains at every subperiod start, updates daily in between
against a fixed set of held-out days and checkpoints its progress, so an
interrupted run resumes where it stopped with identical results. Chains
are merged per (day, hour) by averaging the better half of the ensemble.
"""

import logging
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from scipy.stats import qmc
from sklearn.model_selection import KFold

from .benchmarks import (
    LEAR_WINDOWS,
    lear_point_forecasts,
    naive_1n_forecast,
    naive_b_forecast,
    qra_forecast,
    qrm_forecast,
)
from .cdftools import (
    LEVELS_31,
    LEVELS_99,
    QuantileTable,
    cdf_to_quantiles,
    ensemble_average,
    target_indicators,
    unconditional_quantiles,
    write_quantile_forecasts,
)
from .dataio import (
    HOURS,
    MIN_HISTORY,
    FeatureScaler,
    PricePanel,
    ScheduleEntry,
    WindowSchedule,
    build_design_matrix,
    design_width,
    winsorize_panel,
)
from .distnet import ACTIVATIONS, NetConfig, forward, load_checkpoint, save_checkpoint, train, update
from .errors import ConfigError, DataError, EpfError, HpoError, NumericError, RunError
from .parallel import run_parallel
from .transform import TransformState, asinh_forward, asinh_inverse, fit_transform_state

logger = logging.getLogger(__name__)

SAMPLER_VERSION = "lhs-1"
ALL_HOURS = tuple(range(1, HOURS + 1))


@dataclass
class HpoSpace:
    """Search ranges and fixed training settings for the network."""

    learning_rate: Tuple[float, float] = (1e-4, 3e-3)
    dropout: Tuple[float, float] = (0.0, 0.5)
    weight_decay: Tuple[float, float] = (1e-6, 1e-2)
    hidden_size: Tuple[int, int] = (32, 256)
    batch_sizes: Tuple[int, ...] = (32, 64)
    activations: Tuple[str, ...] = ACTIVATIONS
    n_candidates: int = 40
    folds: int = 5
    lambda_m: float = 1.5
    k: int = 31
    layers: int = 2
    ensembles: int = 4
    max_epochs: int = 1500
    patience: int = 100
    noise_sd: float = 0.1

    def __post_init__(self):
        self.learning_rate = tuple(float(v) for v in self.learning_rate)
        self.dropout = tuple(float(v) for v in self.dropout)
        self.weight_decay = tuple(float(v) for v in self.weight_decay)
        self.hidden_size = tuple(int(v) for v in self.hidden_size)
        self.batch_sizes = tuple(int(v) for v in self.batch_sizes)
        self.activations = tuple(str(a).lower() for a in self.activations)
        self.validate()

    def validate(self):
        for name in ("learning_rate", "dropout", "weight_decay", "hidden_size"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"HPO range {name} has lower bound above upper bound: {(lo, hi)}")
        if self.learning_rate[0] <= 0:
            raise ConfigError("Learning rate range must be positive for log sampling")
        if self.dropout[0] < 0.0 or self.dropout[1] >= 1.0:
            raise ConfigError(f"Dropout range must lie in [0, 1): {self.dropout}")
        if self.hidden_size[0] < 1:
            raise ConfigError(f"Hidden sizes must be positive: {self.hidden_size}")
        if not self.batch_sizes or not self.activations:
            raise ConfigError("Batch sizes and activations must be non-empty")
        unknown = [a for a in self.activations if a not in ACTIVATIONS]
        if unknown:
            raise ConfigError(f"Unknown activation(s) in HPO space: {unknown}")
        if self.n_candidates < 1 or self.folds < 2 or self.layers < 1 or self.ensembles < 1:
            raise ConfigError("n_candidates >= 1, folds >= 2, layers >= 1 and ensembles >= 1 are required")

    def to_dict(self) -> Dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "HpoSpace":
        try:
            return cls(**(data or {}))
        except TypeError as e:
            raise ConfigError(f"Invalid HPO space: {e}") from e


@dataclass
class HpoResult:
    """Selected configuration for one hour."""

    hour: int
    config: NetConfig
    cv_loss: float
    index: int
    losses: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class WindowContext:
    """Per-window preprocessing state shared by all hours and members."""

    window: range
    panel: PricePanel
    state: TransformState
    quantiles: QuantileTable
    anchors: np.ndarray
    scaler: FeatureScaler

    def data(self, days: Sequence[int], hour: int) -> Tuple[np.ndarray, np.ndarray]:
        """Standardized design rows and indicator targets for days with enough history."""
        days = np.asarray(days, dtype=int)
        days = days[days >= MIN_HISTORY]
        if days.size == 0:
            raise DataError(f"No window days with {MIN_HISTORY} days of history")
        X = self.scaler.transform(build_design_matrix(self.panel, self.quantiles, days, hour))
        Y = target_indicators(self.panel.prices[days], self.quantiles)[:, hour - 1, :].astype(float)
        return X, Y

    def rows(self, days: Sequence[int], hour: int) -> np.ndarray:
        return self.scaler.transform(build_design_matrix(self.panel, self.quantiles, days, hour))

    def to_quantiles(self, probs: np.ndarray, hour: int, grid_n: int, levels: Sequence[float] = LEVELS_99) -> np.ndarray:
        """Invert predicted CDF values into price-space quantiles."""
        low, high = self.anchors[hour - 1]
        q = cdf_to_quantiles(probs, self.quantiles.support(hour), (low, high), grid_n, levels)
        return np.maximum.accumulate(asinh_inverse(self.state, q))


def build_context(panel: PricePanel, window: range, proportion: float = 0.001, levels: Sequence[float] = LEVELS_31) -> WindowContext:
    """
    Fit winsorization, transform, quantile table and feature scaling on a window.

    Only rows inside the window inform any fitted quantity.
    """
    rows = np.arange(window.start, window.stop)
    winsorized = winsorize_panel(panel, window, proportion)
    state = fit_transform_state(winsorized.prices[rows])
    transformed = winsorized.with_prices(asinh_forward(state, winsorized.prices))
    window_prices = transformed.prices[rows]
    table = unconditional_quantiles(window_prices, levels)
    anchors = np.column_stack([window_prices.min(axis=0), window_prices.max(axis=0)])

    feasible = rows[rows >= MIN_HISTORY]
    if feasible.size == 0:
        raise DataError(f"Window [{window.start}, {window.stop}) has no day with {MIN_HISTORY} days of history")
    scaler = FeatureScaler(table.k).fit(build_design_matrix(transformed, table, feasible, 1))
    return WindowContext(window=window, panel=transformed, state=state, quantiles=table, anchors=anchors, scaler=scaler)


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def sample_candidates(space: HpoSpace, seed: int, input_dim: Optional[int] = None) -> List[NetConfig]:
    """
    Stratified (Latin hypercube) sample of network configurations.

    The learning rate is sampled on a log scale; every other continuous
    range is linear; discrete choices are taken by stratum.
    """
    input_dim = input_dim or design_width(space.k)
    dims = 4 + space.layers * 2
    unit = qmc.LatinHypercube(d=dims, seed=np.random.default_rng(seed)).random(space.n_candidates)

    def span(lo: float, hi: float, u: np.ndarray) -> np.ndarray:
        return lo + u * (hi - lo)

    def pick(options: Sequence[Any], u: float) -> Any:
        return options[min(int(u * len(options)), len(options) - 1)]

    log_lr = span(np.log10(space.learning_rate[0]), np.log10(space.learning_rate[1]), unit[:, 0])
    candidates = []
    for i in range(space.n_candidates):
        u = unit[i]
        hidden = tuple(int(round(span(*space.hidden_size, u[4 + j]))) for j in range(space.layers))
        acts = tuple(pick(space.activations, u[4 + space.layers + j]) for j in range(space.layers))
        candidates.append(
            NetConfig(
                input_dim=input_dim,
                hidden_sizes=hidden,
                activations=acts,
                output_dim=space.k,
                dropout=float(span(*space.dropout, u[1])),
                learning_rate=float(10.0 ** log_lr[i]),
                weight_decay=float(span(*space.weight_decay, u[2])),
                batch_size=int(pick(space.batch_sizes, u[3])),
                max_epochs=space.max_epochs,
                patience=space.patience,
                lambda_m=space.lambda_m,
                noise_sd=space.noise_sd,
            )
        )
    return candidates


def _cv_task(task: Tuple[int, int, NetConfig, np.ndarray, np.ndarray, int, int]) -> Tuple[float, Optional[str]]:
    hour, index, config, X, Y, folds, seed = task
    losses = []
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed % (2**32))
    for fold, (tr, va) in enumerate(splitter.split(X)):
        try:
            result = train(config, X[tr], Y[tr], _derive_seed(seed, index, fold), validation=(X[va], Y[va]))
        except EpfError as e:
            return float("inf"), f"candidate {index} fold {fold}: {e}"
        losses.append(result.best_val_loss)
    return float(np.mean(losses)), None


def hpo_search(
    space: HpoSpace,
    data: Dict[int, Tuple[np.ndarray, np.ndarray]],
    seed: int,
    workers: Optional[int] = None,
    candidates: Optional[Sequence[NetConfig]] = None,
) -> Dict[int, HpoResult]:
    """
    Select a configuration per hour by K-fold cross-validation.

    Args:
        space: Search space and fixed settings
        data: hour -> (design rows, indicator targets)
        seed: Base seed; each hour derives its own candidate set and folds
        workers: Process count
        candidates: Fixed candidate list used for every hour instead of sampling

    Returns:
        hour -> HpoResult; ties go to the lowest candidate index

    Raises:
        DataError: too few rows for the folds
        HpoError: every candidate failed for some hour
    """
    tasks = []
    per_hour: Dict[int, List[NetConfig]] = {}
    for hour in sorted(data):
        X, Y = data[hour]
        min_batch = min(space.batch_sizes) if candidates is None else min(c.batch_size for c in candidates)
        if X.shape[0] < space.folds * min_batch:
            raise DataError(f"Hour {hour}: {X.shape[0]} rows, need at least {space.folds * min_batch} for HPO")
        hour_seed = _derive_seed(seed, hour)
        configs = list(candidates) if candidates is not None else sample_candidates(space, hour_seed, X.shape[1])
        per_hour[hour] = configs
        tasks.extend((hour, i, cfg, X, Y, space.folds, hour_seed) for i, cfg in enumerate(configs))

    outcomes = run_parallel(_cv_task, tasks, workers, desc="HPO")

    results: Dict[int, HpoResult] = {}
    cursor = 0
    for hour in sorted(per_hour):
        configs = per_hour[hour]
        chunk = outcomes[cursor : cursor + len(configs)]
        cursor += len(configs)
        losses = [loss for loss, _ in chunk]
        failures = [msg for _, msg in chunk if msg]
        for msg in failures:
            logger.warning(f"Hour {hour}: HPO {msg}")
        if not np.any(np.isfinite(losses)):
            raise HpoError(hour, failures)
        best = int(np.argmin(losses))
        results[hour] = HpoResult(hour=hour, config=configs[best], cv_loss=losses[best], index=best, losses=losses, failures=failures)
        logger.info(f"Hour {hour}: selected candidate {best} (CV loss {losses[best]:.5f})")
    return results


def prepare_hpo_data(
    panel: PricePanel, window: range, hours: Sequence[int] = ALL_HOURS, proportion: float = 0.001
) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    """Design rows and targets per hour from the window before the out-of-sample period."""
    context = build_context(panel, window, proportion)
    days = np.arange(window.start, window.stop)
    return {hour: context.data(days, hour) for hour in hours}


@dataclass
class RunManifest:
    """Everything needed to reproduce a rolling run."""

    run_id: str
    seed: int
    configs: Dict[int, NetConfig]
    subperiod_bounds: List[str]
    data_hash: str
    space: Dict[str, Any] = field(default_factory=dict)
    cv_losses: Dict[int, float] = field(default_factory=dict)
    checkpoint_dir: Optional[str] = None
    sampler: str = SAMPLER_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "configs": {int(h): c.to_dict() for h, c in sorted(self.configs.items())},
            "subperiod_bounds": list(self.subperiod_bounds),
            "data_hash": self.data_hash,
            "space": self.space,
            "cv_losses": {int(h): float(v) for h, v in sorted(self.cv_losses.items())},
            "checkpoint_dir": self.checkpoint_dir,
            "sampler": self.sampler,
        }

    def save_yaml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=True)
        logger.info(f"Run manifest saved to {path}")
        return path

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "RunManifest":
        if not Path(path).exists():
            raise ConfigError(f"Run manifest not found: {path} (run 'hpo' first)")
        with open(path, "r") as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict) or "configs" not in data:
            raise ConfigError(f"Not a run manifest: {path}")
        data["configs"] = {int(h): NetConfig.from_dict(c) for h, c in data["configs"].items()}
        data["cv_losses"] = {int(h): float(v) for h, v in (data.get("cv_losses") or {}).items()}
        return cls(**data)


def build_manifest(
    results: Dict[int, HpoResult],
    seed: int,
    panel: PricePanel,
    subperiod_bounds: Sequence[str],
    space: HpoSpace,
    checkpoint_dir: Optional[str] = None,
) -> RunManifest:
    """Manifest whose id depends only on seed, space and data."""
    data_hash = panel.data_hash()
    run_id = uuid.uuid5(uuid.NAMESPACE_OID, f"{seed}:{data_hash}:{sorted(space.to_dict().items())}").hex[:12]
    return RunManifest(
        run_id=run_id,
        seed=seed,
        configs={h: r.config for h, r in results.items()},
        subperiod_bounds=[str(b) for b in subperiod_bounds],
        data_hash=data_hash,
        space=space.to_dict(),
        cv_losses={h: r.cv_loss for h, r in results.items()},
        checkpoint_dir=checkpoint_dir,
    )


@dataclass(frozen=True)
class RollingSettings:
    """Knobs of the rolling run."""

    update_epochs: int = 500
    checkpoint_every: int = 50
    winsor_proportion: float = 0.001
    grid_n: int = 400


@dataclass
class ChainTask:
    panel: PricePanel
    entries: Tuple[ScheduleEntry, ...]
    hour: int
    member: int
    seed: int
    config: NetConfig
    settings: RollingSettings
    checkpoint_path: Optional[str] = None


@dataclass
class ChainOutcome:
    hour: int
    member: int
    quantiles: np.ndarray
    val_losses: np.ndarray
    failure: Optional[str] = None


@dataclass
class RollingResult:
    """Merged rolling forecasts."""

    days: np.ndarray
    dates: np.ndarray
    hours: Tuple[int, ...]
    quantiles: np.ndarray
    val_losses: np.ndarray
    dropped: Dict[int, List[int]] = field(default_factory=dict)

    def write_csv(self, path: Union[str, Path]) -> Path:
        return write_quantile_forecasts(path, self.dates, self.hours, self.quantiles)


def _restore_chain(task: ChainTask, n_entries: int) -> Tuple[int, Optional[Any], np.ndarray, np.ndarray]:
    quantiles = np.full((n_entries, len(LEVELS_99)), np.nan)
    losses = np.full(n_entries, np.nan)
    if not task.checkpoint_path or not Path(task.checkpoint_path).exists():
        return 0, None, quantiles, losses

    saved = load_checkpoint(task.checkpoint_path)
    position = int(saved["meta"].get("position", 0))
    done_days = saved["extra"]["test_days"].astype(int)
    expected = np.array([e.test_day for e in task.entries[:position]], dtype=int)
    if (
        saved["config"].to_dict() != task.config.to_dict()
        or int(saved["seed"]) != task.seed
        or position > n_entries
        or not np.array_equal(done_days, expected)
    ):
        logger.warning(f"Ignoring incompatible checkpoint {task.checkpoint_path}")
        return 0, None, quantiles, losses

    quantiles[:position] = saved["extra"]["quantiles"]
    losses[:position] = saved["extra"]["val_losses"]
    logger.info(f"Hour {task.hour} member {task.member}: resuming after {position} day(s)")
    return position, saved["params"], quantiles, losses


def _save_chain(task: ChainTask, params, context: WindowContext, position: int, quantiles: np.ndarray, losses: np.ndarray) -> None:
    save_checkpoint(
        task.checkpoint_path,
        params,
        task.config,
        task.seed,
        transform=context.state,
        extra={
            "quantiles": quantiles[:position],
            "val_losses": losses[:position],
            "test_days": np.array([e.test_day for e in task.entries[:position]], dtype=int),
        },
        meta={"position": position, "hour": task.hour, "member": task.member},
    )


def held_out_days(seed: int, n_days: int, fraction: float) -> np.ndarray:
    """
    Day-level validation assignment for one chain.

    Every panel day is drawn into validation with probability `fraction`
    once per seed. A day keeps its role for the whole chain, so the daily
    updates never train on validation days.
    """
    return np.random.default_rng(seed).random(n_days) < fraction


def _chain_fit(task: ChainTask, params, X: np.ndarray, Y: np.ndarray, held: np.ndarray, retrain: bool, seed: int):
    settings = task.settings
    if held.any() and (~held).sum() >= 2 * task.config.batch_size:
        rows, targets, validation = X[~held], Y[~held], (X[held], Y[held])
    else:
        rows, targets, validation = X, Y, None
    if retrain or params is None:
        return train(task.config, rows, targets, seed, validation=validation)
    return update(params, task.config, rows, targets, settings.update_epochs, seed, validation=validation)


def _run_chain(task: ChainTask) -> ChainOutcome:
    entries = task.entries
    n = len(entries)
    position, params, quantiles, losses = _restore_chain(task, n)
    settings = task.settings
    context: Optional[WindowContext] = None
    held = held_out_days(task.seed, task.panel.n_days, task.config.val_fraction)

    try:
        for i in range(position, n):
            entry = entries[i]
            if entry.retrain or context is None:
                anchor = next(j for j in range(i, -1, -1) if entries[j].retrain or j == 0)
                context = build_context(task.panel, entries[anchor].window, settings.winsor_proportion)
            days = np.arange(entry.window.start, entry.window.stop)
            days = days[days >= MIN_HISTORY]
            X, Y = context.data(days, task.hour)
            day_seed = _derive_seed(task.seed, entry.test_day)
            result = _chain_fit(task, params, X, Y, held[days], entry.retrain, day_seed)
            params = result.params

            probs = forward(params, task.config, context.rows([entry.test_day], task.hour), "eval")[0]
            quantiles[i] = context.to_quantiles(probs, task.hour, settings.grid_n)
            losses[i] = result.best_val_loss

            done = i + 1
            if task.checkpoint_path and (entry.retrain or done % settings.checkpoint_every == 0 or done == n):
                _save_chain(task, params, context, done, quantiles, losses)
    except NumericError as e:
        return ChainOutcome(task.hour, task.member, quantiles, losses, failure=str(e))

    return ChainOutcome(task.hour, task.member, quantiles, losses)


def rolling_run(
    panel: PricePanel,
    schedule: WindowSchedule,
    configs: Dict[int, NetConfig],
    seed: int,
    ensembles: int = 4,
    settings: Optional[RollingSettings] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    member_seeds: Optional[Sequence[int]] = None,
) -> RollingResult:
    """
    Rolling ensemble forecasts for every hour in configs.

    Args:
        panel: Source panel (raw prices)
        schedule: Rolling schedule
        configs: hour -> selected network configuration
        seed: Base seed; members derive distinct seeds per hour
        ensembles: Members per hour
        settings: Update epochs, checkpoint cadence, winsorization, grid size
        checkpoint_dir: Directory for per-chain checkpoints (enables resume)
        workers: Process count
        member_seeds: Explicit member seeds shared by all hours

    Returns:
        RollingResult with days x hours x 99 quantiles

    Raises:
        RunError: fewer than min(2, ensembles) members survive for an hour
    """
    settings = settings or RollingSettings()
    if not configs:
        raise ConfigError("No network configurations supplied")
    if member_seeds is not None and len(member_seeds) != ensembles:
        raise ConfigError(f"{len(member_seeds)} member seeds for {ensembles} ensemble members")
    hours = tuple(sorted(configs))
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for hour in hours:
        for member in range(ensembles):
            member_seed = int(member_seeds[member]) if member_seeds is not None else _derive_seed(seed, hour, member)
            path = str(ckpt_dir / f"h{hour:02d}_m{member}.npz") if ckpt_dir else None
            tasks.append(ChainTask(panel, tuple(schedule.entries), hour, member, member_seed, configs[hour], settings, path))

    logger.info(f"Rolling run: {len(schedule)} days, {len(hours)} hour(s), {ensembles} member(s)")
    outcomes = run_parallel(_run_chain, tasks, workers, desc="rolling", progress=True)

    n_days = len(schedule)
    merged = np.empty((n_days, len(hours), len(LEVELS_99)))
    all_losses = np.full((n_days, len(hours), ensembles), np.nan)
    dropped: Dict[int, List[int]] = {}
    for j, hour in enumerate(hours):
        chain = [o for o in outcomes if o.hour == hour]
        survivors = [o for o in chain if o.failure is None]
        for o in chain:
            all_losses[:, j, o.member] = o.val_losses
            if o.failure is not None:
                logger.warning(f"Hour {hour}: dropping member {o.member}: {o.failure}")
                dropped.setdefault(hour, []).append(o.member)
        if len(survivors) < min(2, ensembles):
            raise RunError(f"Hour {hour}: only {len(survivors)} of {ensembles} members survived")
        for i in range(n_days):
            merged[i, j] = ensemble_average([o.quantiles[i] for o in survivors], [o.val_losses[i] for o in survivors])

    days = schedule.test_days
    return RollingResult(days=days, dates=panel.days[days], hours=hours, quantiles=merged, val_losses=all_losses, dropped=dropped)


def run_forecasts(
    panel: PricePanel,
    schedule: WindowSchedule,
    manifest: RunManifest,
    output_dir: Union[str, Path],
    runs: int = 1,
    ensembles: int = 4,
    settings: Optional[RollingSettings] = None,
    workers: Optional[int] = None,
    model_name: str = "distrnn",
) -> List[Path]:
    """Repeat the rolling run with seeds seed + 1000 r and write one file per run."""
    output_dir = Path(output_dir)
    paths = []
    for r in range(runs):
        run_seed = manifest.seed + 1000 * r
        ckpt = Path(manifest.checkpoint_dir) / f"run{r}" if manifest.checkpoint_dir else None
        result = rolling_run(panel, schedule, manifest.configs, run_seed, ensembles, settings, ckpt, workers)
        paths.append(result.write_csv(output_dir / f"{model_name}_run{r}.csv"))
    return paths


def run_benchmarks(
    panel: PricePanel,
    schedule: WindowSchedule,
    output_dir: Union[str, Path],
    hours: Sequence[int] = ALL_HOURS,
    naive_window: int = 182,
    bootstrap_draws: int = 5000,
    seed: int = 0,
    lear_windows: Sequence[int] = LEAR_WINDOWS,
    n_lambdas: int = 100,
    lear_folds: int = 7,
    lear_cv_rule: str = "min",
    qr_solver: str = "irls",
    workers: Optional[int] = None,
) -> Dict[str, Path]:
    """
    Produce every benchmark forecast file for the schedule's test days.

    LEAR points are also produced for the calibration days that precede the
    first test day; only test days appear in the quantile files.
    """
    output_dir = Path(output_dir)
    days = schedule.test_days
    hours = tuple(int(h) for h in hours)
    calib = schedule.calibration_len
    dates = panel.days[days]
    paths: Dict[str, Path] = {}

    naive_b = np.array([[naive_b_forecast(panel, t, h, naive_window, bootstrap_draws, seed) for h in hours] for t in days])
    paths["naive_b"] = write_quantile_forecasts(output_dir / "naive_b.csv", dates, hours, naive_b)
    naive_1n = np.array([[naive_1n_forecast(panel, t, h, naive_window) for h in hours] for t in days])
    paths["naive_1n"] = write_quantile_forecasts(output_dir / "naive_1n.csv", dates, hours, naive_1n)
    logger.info(f"Naive benchmarks written for {days.size} day(s)")

    point_days = np.arange(days[0] - calib, days[-1] + 1)
    points = lear_point_forecasts(
        panel, point_days, lear_windows, hours, n_lambdas, lear_folds, workers, cv_rule=lear_cv_rule
    )
    paths["lear_points"] = points.write_csv(output_dir / "lear_points.csv")

    qra = qra_forecast(points, panel.prices, days, calib, solver=qr_solver, workers=workers)
    paths["qra"] = write_quantile_forecasts(output_dir / "qra.csv", dates, hours, qra)
    qrm = qrm_forecast(points, panel.prices, days, calib, solver=qr_solver, workers=workers)
    paths["qrm"] = write_quantile_forecasts(output_dir / "qrm.csv", dates, hours, qrm)
    return paths
