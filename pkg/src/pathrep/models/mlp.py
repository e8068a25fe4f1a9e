"""Feed-forward regressor: tapered hidden widths, inverted dropout, momentum SGD.

Hidden width i is floor(input_width / (NDR * i)), never below 1.  Dropout
thins hidden activations during training only; inference runs the full net.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encode import FeatureMatrix
from ..errors import DataError, TrainingError
from .forest import _dense_rows

_NDR_CHOICES = (4, 8, 16, 32, 64)
_DROPOUT_CHOICES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class MlpHyperparams:
    hidden_layers: int = 1
    ndr: int = 4
    dropout: float = 0.0
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.hidden_layers <= 5:
            raise DataError("hidden_layers must be in [1, 5]")
        if self.ndr not in _NDR_CHOICES:
            raise DataError(f"ndr must be one of {_NDR_CHOICES}")
        if not any(abs(self.dropout - d) < 1e-9 for d in _DROPOUT_CHOICES):
            raise DataError(f"dropout must be one of {_DROPOUT_CHOICES}")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be > 0")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError("momentum must be in [0, 1)")


def layer_widths(input_width: int, hidden_layers: int, ndr: int) -> list[int]:
    """Hidden widths: input_width / (ndr * i), floored, at least 1."""
    return [max(1, input_width // (ndr * i)) for i in range(1, hidden_layers + 1)]


@dataclass
class MlpModel:
    kind: str
    n_features: int
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def predict(self, X) -> np.ndarray:
        rows = _dense_rows(X, self.n_features).astype(np.float64)
        return _forward(self.weights, self.biases, rows)


def _forward(weights, biases, a: np.ndarray) -> np.ndarray:
    last = len(weights) - 1
    for layer, (w, b) in enumerate(zip(weights, biases)):
        a = a @ w + b
        if layer != last:
            a = np.maximum(a, 0.0)
    return a[:, 0]


def loss_and_gradients(weights, biases, X: np.ndarray, y: np.ndarray, masks=None):
    """Mean-squared-error loss and its gradients for one batch.

    masks, when given, holds one inverted-dropout multiplier per hidden
    layer (already scaled by 1/keep).  Without masks this is the exact
    quantity the finite-difference oracle probes.
    """
    last = len(weights) - 1
    pre: list[np.ndarray] = []
    acts = [X]
    a = X
    for layer, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        pre.append(z)
        if layer != last:
            a = np.maximum(z, 0.0)
            if masks is not None:
                a = a * masks[layer]
        else:
            a = z
        acts.append(a)
    pred = acts[-1][:, 0]
    err = pred - y
    n = len(y)
    loss = float(np.mean(err * err))

    grad_w = [np.empty(0)] * len(weights)
    grad_b = [np.empty(0)] * len(weights)
    delta = (2.0 / n) * err[:, None]
    for layer in range(last, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            if masks is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (pre[layer - 1] > 0.0)
    return loss, grad_w, grad_b


def init_parameters(n_features: int, hp: MlpHyperparams, rng: np.random.Generator):
    """He-scaled weights, zero biases, in a fixed draw order."""
    widths = layer_widths(n_features, hp.hidden_layers, hp.ndr)
    sizes = [n_features] + widths + [1]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return weights, biases


def train_mlp(m: FeatureMatrix, hp: MlpHyperparams) -> MlpModel:
    """Mini-batch gradient descent with momentum; deterministic in hp.seed.

    Raises TrainingError when the loss stops being finite.
    """
    if len(m) == 0:
        raise DataError("cannot train an MLP on an empty matrix")
    X = m.to_dense().astype(np.float64)
    y = np.asarray(m.targets, dtype=np.float64)
    n = len(y)
    rng = np.random.default_rng(hp.seed)
    weights, biases = init_parameters(m.n_features, hp, rng)
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    keep = 1.0 - hp.dropout
    n_hidden = len(weights) - 1

    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            batch = order[start:start + hp.batch_size]
            xb = X[batch]
            yb = y[batch]
            masks = None
            if hp.dropout > 0.0:
                masks = [
                    (rng.random((len(batch), w.shape[1])) < keep) / keep
                    for w in weights[:n_hidden]
                ]
            # Overflow here is an expected failure mode, handled right below.
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad_w, grad_b = loss_and_gradients(weights, biases, xb, yb, masks)
            if not np.isfinite(loss):
                raise TrainingError(
                    "training diverged (non-finite loss); lower the learning rate"
                )
            for layer in range(len(weights)):
                vel_w[layer] = hp.momentum * vel_w[layer] - hp.learning_rate * grad_w[layer]
                vel_b[layer] = hp.momentum * vel_b[layer] - hp.learning_rate * grad_b[layer]
                weights[layer] = weights[layer] + vel_w[layer]
                biases[layer] = biases[layer] + vel_b[layer]
    return MlpModel(kind="mlp", n_features=m.n_features, weights=weights, biases=biases)
