"""
Multi-output feedforward network predicting CDF values at fixed levels.

Hidden layers are affine -> batch norm -> activation -> inverted dropout,
and the output layer is affine -> sigmoid. Backpropagation is written out
by hand; training uses AdamW with early stopping on a validation split.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit, softmax

from .distloss import LossBreakdown, bce_monotone_loss, loss_gradient
from .errors import ConfigError, DataError, NonFiniteError, TrainingDivergenceError
from .transform import TransformState

logger = logging.getLogger(__name__)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
CHECKPOINT_VERSION = "epf-net-1"

ACTIVATIONS = ("relu", "tanh", "sigmoid", "softmax", "elu", "softplus")


@dataclass
class NetConfig:
    """Architecture and training hyperparameters."""

    input_dim: int = 252
    hidden_sizes: Tuple[int, ...] = (128, 128)
    activations: Tuple[str, ...] = ("relu", "relu")
    output_dim: int = 31
    dropout: float = 0.1
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 1500
    patience: int = 100
    lambda_m: float = 1.5
    noise_sd: float = 0.1
    batch_norm: bool = True
    val_fraction: float = 0.2

    def __post_init__(self):
        self.hidden_sizes = tuple(int(s) for s in self.hidden_sizes)
        self.activations = tuple(str(a).lower() for a in self.activations)
        self.validate()

    def validate(self):
        if self.input_dim < 1 or self.output_dim < 2:
            raise ConfigError(f"Invalid dimensions: input {self.input_dim}, output {self.output_dim}")
        if len(self.hidden_sizes) != len(self.activations):
            raise ConfigError(
                f"{len(self.hidden_sizes)} hidden layers but {len(self.activations)} activations"
            )
        if any(s < 1 for s in self.hidden_sizes):
            raise ConfigError(f"Hidden sizes must be positive: {self.hidden_sizes}")
        unknown = [a for a in self.activations if a not in ACTIVATIONS]
        if unknown:
            raise ConfigError(f"Unknown activation(s) {unknown}; choose from {ACTIVATIONS}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"Dropout must be in [0, 1), got {self.dropout}")
        if self.batch_size < 2:
            raise ConfigError(f"Batch size must be at least 2, got {self.batch_size}")
        if self.learning_rate < 0 or self.weight_decay < 0 or self.lambda_m < 0 or self.noise_sd < 0:
            raise ConfigError("Learning rate, weight decay, lambda_m and noise_sd must be non-negative")
        if self.max_epochs < 0 or self.patience < 0:
            raise ConfigError("max_epochs and patience must be non-negative")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must be in (0, 1), got {self.val_fraction}")

    @property
    def n_hidden(self) -> int:
        return len(self.hidden_sizes)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hidden_sizes"] = list(self.hidden_sizes)
        data["activations"] = list(self.activations)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetConfig":
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid network config: {e}") from e


@dataclass
class NetParams:
    """Trainable tensors and batch-norm running statistics, keyed by name."""

    weights: Dict[str, np.ndarray]
    running: Dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "NetParams":
        return NetParams(
            weights={k: v.copy() for k, v in self.weights.items()},
            running={k: v.copy() for k, v in self.running.items()},
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in list(self.weights.values()) + list(self.running.values()))


@dataclass
class OptimizerState:
    """AdamW moment accumulators."""

    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: NetParams) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.weights.items()},
            v={k: np.zeros_like(v) for k, v in params.weights.items()},
        )


@dataclass
class TrainResult:
    """Outcome of a training or update run."""

    params: NetParams
    best_val_loss: float
    epochs_run: int
    best_epoch: int
    history: List[float] = field(default_factory=list)


def _layer_sizes(config: NetConfig) -> List[int]:
    return [config.input_dim, *config.hidden_sizes, config.output_dim]


def init_params(config: NetConfig, seed: int) -> NetParams:
    """
    Initialize a network.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases and
    batch-norm shifts start at zero, batch-norm scales at one.
    """
    rng = np.random.default_rng(seed)
    sizes = _layer_sizes(config)
    weights: Dict[str, np.ndarray] = {}
    running: Dict[str, np.ndarray] = {}
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = 1.0 / np.sqrt(fan_in)
        weights[f"W{layer}"] = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        weights[f"b{layer}"] = np.zeros(fan_out)
        if layer < config.n_hidden and config.batch_norm:
            weights[f"gamma{layer}"] = np.ones(fan_out)
            weights[f"beta{layer}"] = np.zeros(fan_out)
            running[f"mean{layer}"] = np.zeros(fan_out)
            running[f"var{layer}"] = np.ones(fan_out)
    return NetParams(weights=weights, running=running)


def _activate(name: str, u: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(u, 0.0)
    if name == "tanh":
        return np.tanh(u)
    if name == "sigmoid":
        return expit(u)
    if name == "softmax":
        return softmax(u, axis=1)
    if name == "elu":
        return np.where(u > 0, u, np.expm1(np.minimum(u, 0.0)))
    if name == "softplus":
        return np.logaddexp(0.0, u)
    raise ConfigError(f"Unknown activation '{name}'")


def _activate_backward(name: str, u: np.ndarray, a: np.ndarray, grad_a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return grad_a * (u > 0)
    if name == "tanh":
        return grad_a * (1.0 - a * a)
    if name == "sigmoid":
        return grad_a * a * (1.0 - a)
    if name == "softmax":
        return a * (grad_a - np.sum(grad_a * a, axis=1, keepdims=True))
    if name == "elu":
        return grad_a * np.where(u > 0, 1.0, a + 1.0)
    if name == "softplus":
        return grad_a * expit(u)
    raise ConfigError(f"Unknown activation '{name}'")


def _forward(
    params: NetParams,
    config: NetConfig,
    batch: np.ndarray,
    mode: str,
    rng: Optional[np.random.Generator],
) -> Tuple[np.ndarray, List[Dict[str, Any]]]:
    if mode not in ("train", "eval"):
        raise ConfigError(f"Mode must be 'train' or 'eval', got '{mode}'")
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[1] != config.input_dim:
        raise DataError(f"Batch of shape {x.shape} does not match input_dim {config.input_dim}")
    train = mode == "train"
    if train and config.dropout > 0 and rng is None:
        raise ConfigError("Train-mode dropout needs a random generator")

    w = params.weights
    caches: List[Dict[str, Any]] = []
    a = x
    for layer, act in enumerate(config.activations):
        z = a @ w[f"W{layer}"].T + w[f"b{layer}"]
        cache: Dict[str, Any] = {"a_prev": a, "z": z}
        if config.batch_norm:
            if train:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
            else:
                mu = params.running[f"mean{layer}"]
                var = params.running[f"var{layer}"]
            std = np.sqrt(var + BN_EPS)
            xhat = (z - mu) / std
            u = w[f"gamma{layer}"] * xhat + w[f"beta{layer}"]
            cache.update(mu=mu, var=var, std=std, xhat=xhat)
        else:
            u = z
        h = _activate(act, u)
        mask = None
        if train and config.dropout > 0:
            mask = (rng.random(h.shape) >= config.dropout) / (1.0 - config.dropout)
            a = h * mask
        else:
            a = h
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(layer + 1)
        cache.update(u=u, h=h, mask=mask)
        caches.append(cache)

    out_layer = config.n_hidden
    z_out = a @ w[f"W{out_layer}"].T + w[f"b{out_layer}"]
    g = expit(z_out)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(out_layer + 1)
    caches.append({"a_prev": a, "g": g})
    return g, caches


def forward(
    params: NetParams,
    config: NetConfig,
    batch: np.ndarray,
    mode: str = "eval",
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Predicted probabilities for a batch of design rows.

    Args:
        params: Network parameters
        config: Network configuration
        batch: n x input_dim rows
        mode: 'train' (batch statistics, dropout) or 'eval' (running statistics)
        rng: Generator for dropout masks in train mode

    Returns:
        n x output_dim probabilities
    """
    return _forward(params, config, batch, mode, rng)[0]


def _backprop(
    params: NetParams,
    config: NetConfig,
    caches: List[Dict[str, Any]],
    targets: np.ndarray,
    lambda_m: float,
    mode: str,
) -> Tuple[Dict[str, np.ndarray], LossBreakdown]:
    w = params.weights
    out = caches[-1]
    g = out["g"]
    loss = bce_monotone_loss(g, targets, lambda_m)
    dz = loss_gradient(g, targets, lambda_m) * g * (1.0 - g)

    grads: Dict[str, np.ndarray] = {}
    out_layer = config.n_hidden
    grads[f"W{out_layer}"] = dz.T @ out["a_prev"]
    grads[f"b{out_layer}"] = dz.sum(axis=0)
    da = dz @ w[f"W{out_layer}"]

    for layer in range(config.n_hidden - 1, -1, -1):
        cache = caches[layer]
        dh = da * cache["mask"] if cache["mask"] is not None else da
        du = _activate_backward(config.activations[layer], cache["u"], cache["h"], dh)
        if config.batch_norm:
            xhat = cache["xhat"]
            grads[f"gamma{layer}"] = np.sum(du * xhat, axis=0)
            grads[f"beta{layer}"] = du.sum(axis=0)
            dxhat = du * w[f"gamma{layer}"]
            if mode == "train":
                n = dxhat.shape[0]
                dz = (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0)) / (n * cache["std"])
            else:
                dz = dxhat / cache["std"]
        else:
            dz = du
        grads[f"W{layer}"] = dz.T @ cache["a_prev"]
        grads[f"b{layer}"] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ w[f"W{layer}"]
        if not all(np.all(np.isfinite(grads[k])) for k in (f"W{layer}", f"b{layer}")):
            raise NonFiniteError(layer + 1, stage="backward")

    return grads, loss


def backward(
    params: NetParams,
    config: NetConfig,
    batch: np.ndarray,
    targets: np.ndarray,
    lambda_m: float,
    mode: str = "train",
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Dict[str, np.ndarray], LossBreakdown]:
    """Gradients of the training loss for every parameter, and the loss itself."""
    _, caches = _forward(params, config, batch, mode, rng)
    return _backprop(params, config, caches, np.asarray(targets, dtype=float), lambda_m, mode)


def adamw_step(
    state: OptimizerState,
    params: NetParams,
    grads: Dict[str, np.ndarray],
    learning_rate: float,
    weight_decay: float,
) -> Tuple[NetParams, OptimizerState]:
    """
    One AdamW step, updating params and state in place.

    Decoupled decay multiplies weight matrices by (1 - lr * weight_decay);
    biases and batch-norm parameters are not decayed.
    """
    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step
    for name, value in params.weights.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise DataError(f"Gradient for {name} has shape {grad.shape}, expected {value.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        if name.startswith("W") and weight_decay:
            value *= 1.0 - learning_rate * weight_decay
        value -= learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params, state


def _update_running(params: NetParams, config: NetConfig, caches: List[Dict[str, Any]]) -> None:
    if not config.batch_norm:
        return
    for layer in range(config.n_hidden):
        cache = caches[layer]
        n = cache["z"].shape[0]
        unbiased = cache["var"] * n / max(n - 1, 1)
        mean = params.running[f"mean{layer}"]
        var = params.running[f"var{layer}"]
        mean *= 1.0 - BN_MOMENTUM
        mean += BN_MOMENTUM * cache["mu"]
        var *= 1.0 - BN_MOMENTUM
        var += BN_MOMENTUM * unbiased


def evaluate_loss(params: NetParams, config: NetConfig, rows: np.ndarray, targets: np.ndarray) -> float:
    """Eval-mode loss on a data set."""
    return bce_monotone_loss(forward(params, config, rows, "eval"), targets, config.lambda_m).total


def train(
    config: NetConfig,
    rows: np.ndarray,
    targets: np.ndarray,
    seed: int,
    init: Optional[NetParams] = None,
    max_epochs: Optional[int] = None,
    validation: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> TrainResult:
    """
    Train with early stopping and return the best snapshot.

    Args:
        config: Network configuration
        rows: n x input_dim design rows
        targets: n x output_dim indicators
        seed: Seed for initialization, the split, noise, shuffling and dropout
        init: Starting parameters (fresh initialization if None)
        max_epochs: Epoch cap (config.max_epochs if None)
        validation: Explicit validation set; otherwise a shuffled split of
            config.val_fraction is held out

    Returns:
        TrainResult with the lowest-validation-loss parameters

    Raises:
        DataError: fewer rows than two batches
        TrainingDivergenceError: non-finite loss or activations
    """
    rows = np.asarray(rows, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if rows.shape[0] != targets.shape[0]:
        raise DataError(f"{rows.shape[0]} rows but {targets.shape[0]} targets")
    if rows.shape[0] < 2 * config.batch_size:
        raise DataError(f"Need at least {2 * config.batch_size} rows to train, got {rows.shape[0]}")

    rng = np.random.default_rng(seed)
    params = init.copy() if init is not None else init_params(config, seed)
    epochs = config.max_epochs if max_epochs is None else max_epochs

    if validation is None:
        perm = rng.permutation(rows.shape[0])
        n_val = max(1, int(round(config.val_fraction * rows.shape[0])))
        x_val, y_val = rows[perm[:n_val]], targets[perm[:n_val]]
        x_tr, y_tr = rows[perm[n_val:]], targets[perm[n_val:]]
    else:
        x_val, y_val = (np.asarray(v, dtype=float) for v in validation)
        x_tr, y_tr = rows, targets

    try:
        best = evaluate_loss(params, config, x_val, y_val)
    except NonFiniteError:
        best = float("inf")
    if not np.isfinite(best):
        raise TrainingDivergenceError(0, best)
    best_params = params.copy()
    best_epoch = 0
    history = [best]
    optimizer = OptimizerState.zeros_like(params)

    wait = 0
    epoch = 0
    n_tr = x_tr.shape[0]
    for epoch in range(1, epochs + 1):
        noisy = x_tr + rng.normal(0.0, config.noise_sd, size=x_tr.shape) if config.noise_sd > 0 else x_tr
        order = rng.permutation(n_tr)
        try:
            for start in range(0, n_tr, config.batch_size):
                idx = order[start : start + config.batch_size]
                if idx.size < 2 and config.batch_norm:
                    continue
                _, caches = _forward(params, config, noisy[idx], "train", rng)
                grads, loss = _backprop(params, config, caches, y_tr[idx], config.lambda_m, "train")
                if not np.isfinite(loss.total):
                    raise TrainingDivergenceError(epoch, loss.total)
                adamw_step(optimizer, params, grads, config.learning_rate, config.weight_decay)
                _update_running(params, config, caches)
            val_loss = evaluate_loss(params, config, x_val, y_val)
        except NonFiniteError as e:
            raise TrainingDivergenceError(epoch) from e
        if not np.isfinite(val_loss):
            raise TrainingDivergenceError(epoch, val_loss)

        history.append(val_loss)
        if val_loss < best:
            best = val_loss
            best_params = params.copy()
            best_epoch = epoch
            wait = 0
        else:
            wait += 1
            if wait > config.patience:
                logger.debug(f"Early stopping at epoch {epoch} (best {best:.6f} at epoch {best_epoch})")
                break

    return TrainResult(params=best_params, best_val_loss=float(best), epochs_run=epoch, best_epoch=best_epoch, history=history)


def update(
    params: NetParams,
    config: NetConfig,
    rows: np.ndarray,
    targets: np.ndarray,
    epochs: int = 500,
    seed: int = 0,
    validation: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> TrainResult:
    """Continue training from existing parameters for at most `epochs` epochs."""
    return train(config, rows, targets, seed, init=params, max_epochs=epochs, validation=validation)


def save_checkpoint(
    path: Union[str, Path],
    params: NetParams,
    config: NetConfig,
    seed: int,
    transform: Optional[TransformState] = None,
    extra: Optional[Dict[str, np.ndarray]] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write parameters, config, seed and transform state to a version-tagged .npz."""
    header = {
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "seed": int(seed),
        "transform": transform.to_dict() if transform is not None else None,
        "meta": meta or {},
    }
    arrays = {f"w__{k}": v for k, v in params.weights.items()}
    arrays.update({f"r__{k}": v for k, v in params.running.items()})
    arrays.update({f"x__{k}": np.asarray(v) for k, v in (extra or {}).items()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, __header__=np.array(json.dumps(header, sort_keys=True)), **arrays)
    tmp.replace(path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        Dict with params, config, seed, transform, extra and meta

    Raises:
        DataError: missing file or version mismatch
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["__header__"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise DataError(f"Checkpoint {path} has version {header.get('version')}, expected {CHECKPOINT_VERSION}")
        weights = {k[3:]: data[k] for k in data.files if k.startswith("w__")}
        running = {k[3:]: data[k] for k in data.files if k.startswith("r__")}
        extra = {k[3:]: data[k] for k in data.files if k.startswith("x__")}
    transform = header.get("transform")
    return {
        "params": NetParams(weights=weights, running=running),
        "config": NetConfig.from_dict(header["config"]),
        "seed": header["seed"],
        "transform": TransformState.from_dict(transform) if transform else None,
        "extra": extra,
        "meta": header.get("meta", {}),
    }
