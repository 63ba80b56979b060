"""
Linear classifier head over fused frequency features.

Features are standardized with training-set statistics, then scored with
sigmoid(w . x + b). Training minimizes binary cross-entropy with Adam and
divides the learning rate by 10 whenever accuracy stops improving for
`patience` consecutive epochs.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

try:
    from atomic_io import atomic_write_json
    from errors import (
        ConfigError,
        DataCorruptionError,
        DegenerateDataError,
        FileOperationError,
        ShapeError,
    )
    from feature_store import common_fingerprint, feature_matrix
    from models import FusedFeature
except ImportError:
    from .atomic_io import atomic_write_json
    from .errors import (
        ConfigError,
        DataCorruptionError,
        DegenerateDataError,
        FileOperationError,
        ShapeError,
    )
    from .feature_store import common_fingerprint, feature_matrix
    from .models import FusedFeature

logger = logging.getLogger(__name__)

STD_EPSILON = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimizer and schedule of the linear head.

    Attributes:
        beta1: Adam first-moment decay
        beta2: Adam second-moment decay
        lr: Starting learning rate
        epochs: Passes over the training set
        batch_size: Mini-batch size; the full set when larger than it
        patience: Epochs without accuracy gain before the learning rate drops
        decay: Divisor applied to the learning rate on a plateau
        min_lr: Floor of the learning rate
        seed: Shuffling seed
        adam_eps: Adam denominator guard
    """

    beta1: float = 0.9
    beta2: float = 0.999
    lr: float = 1e-4
    epochs: int = 100
    batch_size: int = 32
    patience: int = 5
    decay: float = 10.0
    min_lr: float = 1e-7
    seed: int = 0
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ConfigError(f"Adam betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if not self.lr > 0:
            raise ConfigError(f"Learning rate must be positive, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"Epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"Batch size must be at least 1, got {self.batch_size}")
        if self.patience < 1 or not self.decay > 1:
            raise ConfigError("Plateau rule needs patience >= 1 and decay > 1")
        if self.min_lr < 0 or self.adam_eps < 0:
            raise ConfigError("min_lr and adam_eps must be non-negative")

    def to_dict(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "lr": self.lr,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "patience": self.patience,
            "decay": self.decay,
            "min_lr": self.min_lr,
            "seed": self.seed,
            "adam_eps": self.adam_eps,
        }


class AdamOptimizer:
    """Adam with bias-corrected moments over a flat parameter vector."""

    def __init__(self, size: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def loss_and_gradient(weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray, float]:
    """
    Mean binary cross-entropy of sigmoid(x @ w + b) and its gradient.

    Uses log(1 + exp(z)) - y * z so large logits stay finite.

    Returns:
        (loss, d loss / d w, d loss / d b)
    """
    z = x @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    residual = (expit(z) - y) / len(y)
    return loss, x.T @ residual, float(residual.sum())


@dataclass
class LinearHead:
    """
    Standardize-then-logistic scoring head.

    Attributes:
        weights: C weights over standardized features
        bias: Logit offset
        mean: Per-dimension training mean
        std: Per-dimension training std, guarded away from zero
        trained: Whether any optimization step ran
        fingerprint: Pipeline fingerprint of the training features
        config_fingerprint: Fingerprint of the training run settings
        history: Per-epoch loss, accuracy and learning rate
    """

    weights: np.ndarray
    bias: float = 0.0
    mean: Optional[np.ndarray] = None
    std: Optional[np.ndarray] = None
    trained: bool = False
    fingerprint: str = ""
    config_fingerprint: str = ""
    history: List[Dict[str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise ShapeError(f"Head weights must be a vector, got shape {self.weights.shape}")
        size = self.weights.shape[0]
        self.mean = np.zeros(size) if self.mean is None else np.asarray(self.mean, dtype=np.float64)
        self.std = np.ones(size) if self.std is None else np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != (size,) or self.std.shape != (size,):
            raise ShapeError("Standardization statistics must match the weight length")
        self.std = np.maximum(self.std, STD_EPSILON)
        self.bias = float(self.bias)

    @property
    def dimension(self) -> int:
        return int(self.weights.shape[0])

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def logits(self, x) -> np.ndarray:
        values = np.asarray(x, dtype=np.float64)
        if values.shape[-1] != self.dimension:
            raise ShapeError(
                f"Head expects {self.dimension}-dimensional features, got {values.shape[-1]}"
            )
        return self.standardize(values) @ self.weights + self.bias

    def predict(self, x) -> np.ndarray:
        """Fake-class probabilities for a batch of raw feature vectors."""
        return expit(self.logits(x))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "weights": [float(w) for w in self.weights],
            "bias": self.bias,
            "mean": [float(m) for m in self.mean],
            "std": [float(s) for s in self.std],
            "trained": self.trained,
            "fingerprint": self.fingerprint,
            "config_fingerprint": self.config_fingerprint,
            "history": self.history,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearHead":
        head = cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=data.get("bias", 0.0),
            mean=data.get("mean"),
            std=data.get("std"),
            trained=bool(data.get("trained", False)),
            fingerprint=data.get("fingerprint", ""),
            config_fingerprint=data.get("config_fingerprint", ""),
            history=list(data.get("history", [])),
        )
        if "dimension" in data and int(data["dimension"]) != head.dimension:
            raise DataCorruptionError(
                f"Head declares dimension {data['dimension']} but holds {head.dimension} weights"
            )
        return head


def _accuracy(head: LinearHead, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((head.predict(x) >= 0.5) == (y == 1)))


def train(
    features: Sequence[FusedFeature],
    config: Optional[TrainConfig] = None,
    validation: Optional[Sequence[FusedFeature]] = None,
) -> LinearHead:
    """
    Fit a LinearHead on labeled features.

    The plateau rule watches validation accuracy when a validation set is
    given and training accuracy otherwise; a strictly greater accuracy resets
    the patience counter.

    Raises:
        DegenerateDataError: If the training set lacks one of the classes
    """
    config = config or TrainConfig()
    x, y = feature_matrix(features)
    if y.min() == y.max():
        only = "fake" if y[0] == 1 else "real"
        raise DegenerateDataError(f"Training set holds only {only} samples; both classes are required")
    fingerprint = common_fingerprint(features, "training features")
    if validation:
        x_val, y_val = feature_matrix(validation)
        if x_val.shape[1] != x.shape[1]:
            raise ShapeError(f"Validation features have {x_val.shape[1]} dims, training {x.shape[1]}")
    else:
        x_val, y_val = x, y

    head = LinearHead(
        weights=np.zeros(x.shape[1]),
        mean=x.mean(axis=0),
        std=x.std(axis=0),
        fingerprint=fingerprint,
    )
    if config.epochs == 0:
        return head

    x_std = head.standardize(x)
    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(x.shape[1] + 1, config.beta1, config.beta2, config.adam_eps)
    params = np.zeros(x.shape[1] + 1)
    lr = config.lr
    best = -math.inf
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grad_w, grad_b = loss_and_gradient(params[:-1], params[-1], x_std[batch], y[batch])
            params = optimizer.step(params, np.append(grad_w, grad_b), lr)
        head.weights, head.bias = params[:-1].copy(), float(params[-1])
        loss, _, _ = loss_and_gradient(head.weights, head.bias, x_std, y)
        monitored = _accuracy(head, x_val, y_val)
        head.history.append({"epoch": epoch + 1, "loss": loss, "accuracy": monitored, "lr": lr})
        if monitored > best:
            best, stale = monitored, 0
        else:
            stale += 1
            if stale >= config.patience:
                new_lr = max(lr / config.decay, config.min_lr)
                if new_lr < lr:
                    logger.info("Epoch %d: accuracy plateau, learning rate %.3g -> %.3g", epoch + 1, lr, new_lr)
                lr, stale = new_lr, 0
    head.trained = True
    logger.info("Trained head on %d samples, final loss %.6f", len(y), head.history[-1]["loss"])
    return head


def score(head: LinearHead, feature) -> float:
    """
    Fake-class probability of one feature.

    Raises:
        ShapeError: If the feature length differs from the head dimension
    """
    values = getattr(feature, "values", feature)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ShapeError(f"score expects one feature vector, got shape {values.shape}")
    return float(head.predict(values))


def save_head(path, head: LinearHead) -> Path:
    return atomic_write_json(path, head.to_dict())


def load_head(path) -> LinearHead:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, IOError) as e:
        raise FileOperationError(f"Cannot read head file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataCorruptionError(f"Head file {path} is not valid JSON: {e}") from e
    try:
        return LinearHead.from_dict(data)
    except (KeyError, TypeError) as e:
        raise DataCorruptionError(f"Head file {path} is malformed: {e}") from e
