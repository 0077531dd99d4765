"""Small feed-forward binary classifier trained with momentum SGD.

Hidden layers are rectified-linear, the output unit is a sigmoid, and the
loss is class-weighted binary cross-entropy averaged per batch. Weights
initialize uniformly in +-sqrt(6/fan_in) with zero biases. Training shuffles
rows each epoch from a seeded generator and applies updates serially, so a
fixed seed gives a fixed model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numeric import log_loss_terms, sigmoid
from ..resample import ClassWeights

MLP_FORMAT_VERSION = 1
_MOMENTUM = 0.9

HIDDEN_MIN, HIDDEN_MAX = 16, 256
MAX_HIDDEN_LAYERS = 3


class MlpError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpArchitecture:
    hidden_layers: tuple[int, ...] = (64,)
    learning_rate: float = 0.01
    batch_size: int = 256
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 1 <= len(self.hidden_layers) <= MAX_HIDDEN_LAYERS:
            raise MlpError(f"hidden layer count must be 1..{MAX_HIDDEN_LAYERS}")
        for size in self.hidden_layers:
            if not HIDDEN_MIN <= size <= HIDDEN_MAX:
                raise MlpError(f"hidden size {size} outside [{HIDDEN_MIN}, {HIDDEN_MAX}]")
        if self.learning_rate <= 0:
            raise MlpError("learning_rate must be positive")
        if self.batch_size < 1:
            raise MlpError("batch_size must be >= 1")
        if self.epochs < 0:
            raise MlpError("epochs must be >= 0")


@dataclass(frozen=True)
class MlpModel:
    weights: tuple[np.ndarray, ...]  # layer l: (fan_in, fan_out)
    biases: tuple[np.ndarray, ...]
    architecture: MlpArchitecture | None = None

    def to_dict(self) -> dict:
        return {
            "format_version": MLP_FORMAT_VERSION,
            "layer_shapes": [list(w.shape) for w in self.weights],
            "weights": [w.ravel().tolist() for w in self.weights],  # row-major
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        weights = tuple(
            np.asarray(flat, dtype=np.float64).reshape(shape)
            for flat, shape in zip(doc["weights"], doc["layer_shapes"])
        )
        biases = tuple(np.asarray(b, dtype=np.float64) for b in doc["biases"])
        return cls(weights=weights, biases=biases)


def init_params(layer_sizes: list[int], rng: np.random.Generator):
    """Uniform +-sqrt(6/fan_in) weights, zero biases, for sizes
    [n_in, hidden..., 1]."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X: np.ndarray) -> np.ndarray:
    """Output probabilities; hidden layers ReLU, output sigmoid."""
    a = X
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        a = sigmoid(z)[:, 0] if l == last else np.maximum(z, 0.0)
    return a


def loss_and_gradients(weights, biases, X, y, sample_w):
    """Batch-mean weighted BCE and its gradients w.r.t. every parameter.

    The batch gradient is a sum over rows, so permuting rows within the
    batch leaves the update unchanged.
    """
    n = X.shape[0]
    last = len(weights) - 1
    activations = [X]
    a = X
    z_out = None
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        if l == last:
            z_out = z[:, 0]
        else:
            a = np.maximum(z, 0.0)
            activations.append(a)

    loss = float(np.sum(sample_w * log_loss_terms(z_out, y)) / n)
    p = sigmoid(z_out)
    delta = (sample_w * (p - y) / n)[:, None]  # dL/dz_out

    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for l in range(last, -1, -1):
        grad_w[l] = activations[l].T @ delta
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (activations[l] > 0)
    return loss, grad_w, grad_b


def train_mlp(
    features: np.ndarray,
    labels: np.ndarray,
    arch: MlpArchitecture,
    weights: ClassWeights | None = None,
) -> MlpModel:
    """Mini-batch momentum SGD on standardized features.

    Raises on divergence (non-finite loss), reporting the offending epoch.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = X.shape[0]
    if arch.batch_size > n:
        raise MlpError(f"batch_size {arch.batch_size} exceeds {n} training rows")
    if y.min() == y.max():
        raise MlpError("both classes must be present")

    sample_w = weights.per_sample(y) if weights is not None else np.ones(n)
    rng = np.random.default_rng(arch.seed)
    sizes = [X.shape[1], *arch.hidden_layers, 1]
    W, b = init_params(sizes, rng)
    vel_w = [np.zeros_like(w) for w in W]
    vel_b = [np.zeros_like(bb) for bb in b]

    for epoch in range(arch.epochs):
        order = rng.permutation(n)
        for start in range(0, n, arch.batch_size):
            rows = order[start : start + arch.batch_size]
            loss, gw, gb = loss_and_gradients(W, b, X[rows], y[rows], sample_w[rows])
            if not np.isfinite(loss):
                raise MlpError(f"non-finite loss at epoch {epoch}")
            for l in range(len(W)):
                vel_w[l] = _MOMENTUM * vel_w[l] - arch.learning_rate * gw[l]
                vel_b[l] = _MOMENTUM * vel_b[l] - arch.learning_rate * gb[l]
                W[l] = W[l] + vel_w[l]
                b[l] = b[l] + vel_b[l]

    return MlpModel(weights=tuple(W), biases=tuple(b), architecture=arch)


def predict_proba_mlp(model: MlpModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model "
            f"({model.weights[0].shape[0]})"
        )
    return forward(model.weights, model.biases, X)
