"""From-scratch feedforward network: sigmoid hidden layers, softmax output,
backpropagation, and minibatch SGD with momentum.

The two stock hyperparameter profiles (`TrainingConfig.high_budget` and
`TrainingConfig.low_budget`) correspond to training with plenty of labels
versus training from a small labeled seed set.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

PROB_FLOOR = 1e-12  # cross-entropy clamp: loss reads max(p, PROB_FLOOR)

LOSS_KINDS = ("cross_entropy", "squared_error")


class NumericOverflowError(ArithmeticError):
    """A forward/backward pass produced a non-finite value."""


@dataclass(frozen=True)
class TrainingConfig:
    hidden_layers: int = 2
    neurons_per_layer: int = 60
    loss_kind: str = "cross_entropy"
    hidden_activation: str = "sigmoid"
    output_activation: str = "softmax"
    weight_init_scale: float = 1.0
    minibatch_size: int = 5
    momentum: float = 0.9
    epochs: int = 8
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers < 1 or self.neurons_per_layer < 1 or self.minibatch_size < 1:
            raise ValueError("layer, neuron, and minibatch counts must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.learning_rate <= 0 or self.weight_init_scale <= 0:
            raise ValueError("learning_rate and weight_init_scale must be positive")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if self.hidden_activation != "sigmoid" or self.output_activation != "softmax":
            raise ValueError("only sigmoid hidden / softmax output activations are supported")

    @classmethod
    def high_budget(cls, **overrides) -> "TrainingConfig":
        """Profile for training on a large labeled set: 2x60, cross entropy, minibatch 5."""
        base = dict(
            hidden_layers=2,
            neurons_per_layer=60,
            loss_kind="cross_entropy",
            weight_init_scale=1.0,
            minibatch_size=5,
            momentum=0.9,
            epochs=8,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def low_budget(cls, **overrides) -> "TrainingConfig":
        """Profile for training on a small labeled seed set: 2x10, squared error,
        minibatch 25, initial weights scaled by 0.5."""
        base = dict(
            hidden_layers=2,
            neurons_per_layer=10,
            loss_kind="squared_error",
            weight_init_scale=0.5,
            minibatch_size=25,
            momentum=0.9,
            epochs=10,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class NetworkParams:
    """Per-layer weight matrices (out x in) and bias vectors, input to output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up layer by layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight rows do not match bias length")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input width does not chain from layer {i - 1}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameter")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class Gradients:
    """Loss gradients shaped like NetworkParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class Normalizer:
    """Per-feature scale factors, fitted once on the training set and then frozen.

    Scaling divides by the max absolute value seen per feature (floored at 1),
    so normalized training inputs live in [-1, 1]. Fit-once-apply-always: the
    transform is not idempotent and must not be re-fitted downstream.
    """

    scale: np.ndarray

    def __post_init__(self):
        if np.any(self.scale <= 0):
            raise ValueError("normalizer scales must be strictly positive")

    @classmethod
    def fit(cls, features: np.ndarray) -> "Normalizer":
        scale = np.abs(np.asarray(features, dtype=float)).max(axis=0)
        return cls(np.maximum(scale, 1.0))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) / self.scale


@dataclass
class Activations:
    """Layer outputs for one input: normalized input, each hidden layer, then
    the output probability 2-vector."""

    layers: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.layers[-1]


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def init_network(config: TrainingConfig, input_dim: int) -> NetworkParams:
    """Symmetric fan-scaled uniform init, multiplied by config.weight_init_scale."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    rng = np.random.default_rng(config.seed)
    sizes = [input_dim] + [config.neurons_per_layer] * config.hidden_layers + [2]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_out, fan_in)) * config.weight_init_scale)
        biases.append(rng.uniform(-limit, limit, fan_out) * config.weight_init_scale)
    return NetworkParams(weights, biases)


def _forward_batch(params: NetworkParams, x_norm: np.ndarray) -> list[np.ndarray]:
    """All layer activations for a (n, input_dim) normalized batch."""
    acts = [x_norm]
    a = x_norm
    last = len(params.weights) - 1
    with np.errstate(invalid="ignore", over="ignore"):
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            z = a @ w.T + b
            a = softmax(z) if i == last else sigmoid(z)
            if not np.isfinite(a).all():
                raise NumericOverflowError(f"non-finite activation in layer {i}")
            acts.append(a)
    return acts


def forward(params: NetworkParams, x: np.ndarray, norm: Normalizer) -> Activations:
    """Forward pass for a single feature vector."""
    x_norm = norm.apply(np.asarray(x, dtype=float).reshape(1, -1))
    acts = _forward_batch(params, x_norm)
    return Activations([a[0] for a in acts])


def loss(output, label: int, kind: str) -> float:
    """Per-sample loss of an output probability 2-vector against a class label."""
    p = np.asarray(output, dtype=float)
    j = label - 1
    if kind == "cross_entropy":
        return float(-np.log(max(p[j], PROB_FLOOR)))
    if kind == "squared_error":
        y = np.zeros(p.shape)
        y[j] = 1.0
        return float(np.sum((p - y) ** 2))
    raise ValueError(f"unknown loss kind {kind!r}")


def _onehot(labels: np.ndarray) -> np.ndarray:
    y = np.zeros((labels.shape[0], 2))
    y[np.arange(labels.shape[0]), labels - 1] = 1.0
    return y


def _output_delta(probs: np.ndarray, labels: np.ndarray, kind: str) -> np.ndarray:
    """d(mean loss)/d(output logits) for a batch, up to the 1/n factor."""
    y = _onehot(labels)
    if kind == "cross_entropy":
        delta = probs - y
        # where the clamp is active the loss is locally constant
        clamped = probs[np.arange(len(labels)), labels - 1] < PROB_FLOOR
        delta[clamped] = 0.0
        return delta
    if kind == "squared_error":
        r = 2.0 * (probs - y)
        s = np.sum(probs * r, axis=1, keepdims=True)
        return probs * (r - s)
    raise ValueError(f"unknown loss kind {kind!r}")


def _gradients_normalized(
    params: NetworkParams, x_norm: np.ndarray, labels: np.ndarray, kind: str
) -> Gradients:
    acts = _forward_batch(params, x_norm)
    n = x_norm.shape[0]
    delta = _output_delta(acts[-1], labels, kind) / n
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ acts[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            a = acts[layer]
            delta = (delta @ params.weights[layer]) * a * (1.0 - a)
    return Gradients(grad_w, grad_b)


def gradients(params: NetworkParams, batch, config: TrainingConfig, norm: Normalizer) -> Gradients:
    """Mean gradient of the configured loss over a batch of (features, label) pairs."""
    if not batch:
        raise ValueError("batch is empty")
    x = np.stack([np.asarray(f, dtype=float) for f, _ in batch])
    labels = np.asarray([lab for _, lab in batch])
    return _gradients_normalized(params, norm.apply(x), labels, config.loss_kind)


def mean_loss(params: NetworkParams, x_norm: np.ndarray, labels: np.ndarray, kind: str) -> float:
    probs = _forward_batch(params, x_norm)[-1]
    if kind == "cross_entropy":
        p = np.maximum(probs[np.arange(len(labels)), labels - 1], PROB_FLOOR)
        return float(np.mean(-np.log(p)))
    y = _onehot(labels)
    return float(np.mean(np.sum((probs - y) ** 2, axis=1)))


def train(dataset, config: TrainingConfig) -> tuple[NetworkParams, Normalizer]:
    """Minibatch momentum SGD: v <- momentum*v - lr*g, w <- w + v.

    The normalizer is fitted on the full dataset before the first epoch and
    frozen. Minibatch order reshuffles per epoch from config.seed; the whole
    run is deterministic for a fixed seed.
    """
    pairs = list(dataset)
    if not pairs:
        raise ValueError("dataset is empty")
    x = np.stack([np.asarray(f, dtype=float) for f, _ in pairs])
    labels = np.asarray([lab for _, lab in pairs])
    if len(np.unique(labels)) < 2:
        raise ValueError("training data must contain both classes")

    norm = Normalizer.fit(x)
    params = init_network(config, x.shape[1])
    if config.epochs == 0:
        return params, norm

    x_norm = norm.apply(x)
    rng = np.random.default_rng(config.seed)
    vel_w = [np.zeros_like(w) for w in params.weights]
    vel_b = [np.zeros_like(b) for b in params.biases]
    n = len(pairs)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            g = _gradients_normalized(params, x_norm[idx], labels[idx], config.loss_kind)
            for i in range(len(params.weights)):
                vel_w[i] = config.momentum * vel_w[i] - config.learning_rate * g.weights[i]
                vel_b[i] = config.momentum * vel_b[i] - config.learning_rate * g.biases[i]
                params.weights[i] = params.weights[i] + vel_w[i]
                params.biases[i] = params.biases[i] + vel_b[i]
    return params, norm


def predict_scores(params: NetworkParams, norm: Normalizer, features: np.ndarray) -> np.ndarray:
    """Probability of class 2 for each row of a feature matrix."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    return _forward_batch(params, norm.apply(x))[-1][:, 1]


def predict_score(params: NetworkParams, norm: Normalizer, x: np.ndarray) -> float:
    """Classification likelihood score: probability of class 2 (low score => class 1)."""
    return float(predict_scores(params, norm, np.asarray(x, dtype=float).reshape(1, -1))[0])


def save_network(path, params: NetworkParams, norm: Normalizer, config: TrainingConfig) -> None:
    """Self-describing JSON dump; floats round-trip exactly (shortest repr)."""
    payload = {
        "layer_sizes": params.layer_sizes,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "normalizer_scale": norm.scale.tolist(),
        "config": asdict(config),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_network(path) -> tuple[NetworkParams, Normalizer, TrainingConfig]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    params = NetworkParams(
        [np.asarray(w, dtype=float) for w in payload["weights"]],
        [np.asarray(b, dtype=float) for b in payload["biases"]],
    )
    norm = Normalizer(np.asarray(payload["normalizer_scale"], dtype=float))
    config = TrainingConfig(**payload["config"])
    return params, norm, config
