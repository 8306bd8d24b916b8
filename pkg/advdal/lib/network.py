"""
Dense one-hidden-layer ReLU classifier.

This module provides the model every other component works against:
- Inference on single inputs and on row batches (logits, predictions)
- Penultimate (hidden-layer) features
- Input gradients of the softmax cross-entropy loss and the logit Jacobian
- Seeded initialization and deterministic Adam minibatch training

All arithmetic is 64-bit floating point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple

import numpy as np

from ..constants import (
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON,
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
)
from ..errors import InvalidArgumentError

if TYPE_CHECKING:
    from .datasets import Dataset

logger = logging.getLogger(__name__)


@dataclass
class MlpModel:
    """Parameters of ``logits = W2 · relu(W1 · x + b1) + b2``.

    Parameters
    ----------
    W1 : np.ndarray
        Hidden weights, shape ``(hidden_dim, input_dim)``
    b1 : np.ndarray
        Hidden biases, shape ``(hidden_dim,)``
    W2 : np.ndarray
        Output weights, shape ``(num_classes, hidden_dim)``
    b2 : np.ndarray
        Output biases, shape ``(num_classes,)``
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        self.W1 = np.array(self.W1, dtype=np.float64, ndmin=2)
        self.b1 = np.array(self.b1, dtype=np.float64).reshape(-1)
        self.W2 = np.array(self.W2, dtype=np.float64, ndmin=2)
        self.b2 = np.array(self.b2, dtype=np.float64).reshape(-1)
        hidden, _ = self.W1.shape
        if self.b1.shape != (hidden,):
            raise InvalidArgumentError(f"b1 has shape {self.b1.shape}, expected ({hidden},)")
        if self.W2.shape[1] != hidden:
            raise InvalidArgumentError(f"W2 has shape {self.W2.shape}, expected (*, {hidden})")
        if self.b2.shape != (self.W2.shape[0],):
            raise InvalidArgumentError(f"b2 has shape {self.b2.shape}, expected ({self.W2.shape[0]},)")
        for name, param in zip(("W1", "b1", "W2", "b2"), self.parameters()):
            if param.size == 0:
                raise InvalidArgumentError(f"{name} is empty")
            if not np.all(np.isfinite(param)):
                raise InvalidArgumentError(f"{name} has non-finite entries")

    @property
    def input_dim(self) -> int:
        return int(self.W1.shape[1])

    @property
    def hidden_dim(self) -> int:
        return int(self.W1.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.W2.shape[0])

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, num_classes: int, seed: int) -> "MlpModel":
        """Seeded uniform ``±sqrt(6 / (fan_in + fan_out))`` init with zero biases."""
        if min(input_dim, hidden_dim, num_classes) <= 0:
            raise InvalidArgumentError("all dimensions must be positive")
        rng = np.random.default_rng(seed)
        limit1 = np.sqrt(6.0 / (input_dim + hidden_dim))
        limit2 = np.sqrt(6.0 / (hidden_dim + num_classes))
        return cls(
            W1=rng.uniform(-limit1, limit1, size=(hidden_dim, input_dim)),
            b1=np.zeros(hidden_dim),
            W2=rng.uniform(-limit2, limit2, size=(num_classes, hidden_dim)),
            b2=np.zeros(num_classes),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, num_classes: int) -> "MlpModel":
        return cls(
            W1=np.zeros((hidden_dim, input_dim)),
            b1=np.zeros(hidden_dim),
            W2=np.zeros((num_classes, hidden_dim)),
            b2=np.zeros(num_classes),
        )

    def parameters(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.W1, self.b1, self.W2, self.b2

    def copy(self) -> "MlpModel":
        return MlpModel(*(p.copy() for p in self.parameters()))

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise InvalidArgumentError(f"input has shape {x.shape}, expected ({self.input_dim},)")
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("input has non-finite entries")
        return x

    def _check_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise InvalidArgumentError(f"batch has shape {X.shape}, expected (n, {self.input_dim})")
        return X

    def _check_class(self, y: int) -> int:
        if not 0 <= int(y) < self.num_classes:
            raise InvalidArgumentError(f"class {y} outside [0, {self.num_classes})")
        return int(y)

    def pre_activation(self, x: np.ndarray) -> np.ndarray:
        return self.W1 @ self._check_input(x) + self.b1

    def penultimate(self, x: np.ndarray) -> np.ndarray:
        """Hidden-layer activations ``relu(W1 · x + b1)``."""
        return np.maximum(self.pre_activation(x), 0.0)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for a single input."""
        return self.W2 @ self.penultimate(x) + self.b2

    def predict(self, x: np.ndarray) -> int:
        """Argmax of the logits; ties resolve to the lowest class index."""
        return int(np.argmax(self.forward(x)))

    def penultimate_batch(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(self._check_batch(X) @ self.W1.T + self.b1, 0.0)

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        return self.penultimate_batch(X) @ self.W2.T + self.b2

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward_batch(X), axis=1)

    def loss_grad_input(self, x: np.ndarray, y: int) -> np.ndarray:
        """Gradient of ``cross_entropy(forward(x), y)`` with respect to ``x``."""
        y = self._check_class(y)
        z = self.pre_activation(x)
        logits = self.W2 @ np.maximum(z, 0.0) + self.b2
        grad_logits = softmax(logits)
        grad_logits[y] -= 1.0
        grad_hidden = (self.W2.T @ grad_logits) * (z > 0.0)
        return self.W1.T @ grad_hidden

    def input_jacobian(self, x: np.ndarray) -> np.ndarray:
        """Jacobian of the logits with respect to ``x``, shape ``(num_classes, input_dim)``."""
        active = self.pre_activation(x) > 0.0
        return (self.W2 * active) @ self.W1


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, y: int) -> float:
    """Softmax cross-entropy via max-subtracted log-sum-exp."""
    logits = np.asarray(logits, dtype=np.float64)
    top = np.max(logits)
    log_sum = top + np.log(np.sum(np.exp(logits - top)))
    return float(log_sum - logits[int(y)])


def accuracy(model: MlpModel, dataset: "Dataset") -> float:
    """Fraction of samples whose prediction equals the label."""
    if len(dataset) == 0:
        raise InvalidArgumentError("accuracy needs a non-empty dataset")
    return float(np.mean(model.predict_batch(dataset.features) == dataset.labels))


@dataclass(frozen=True)
class TrainConfig:
    """Minibatch training schedule."""

    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise InvalidArgumentError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size <= 0:
            raise InvalidArgumentError(f"batch_size must be positive, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise InvalidArgumentError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the model parameters."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in model.parameters()],
            v=[np.zeros_like(p) for p in model.parameters()],
        )

    def copy(self) -> "AdamState":
        return AdamState([a.copy() for a in self.m], [a.copy() for a in self.v], self.step_count)


def adam_step(
    params: List[np.ndarray],
    grads: List[np.ndarray],
    state: AdamState,
    learning_rate: float,
) -> None:
    """Apply one bias-corrected Adam update in place."""
    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - ADAM_BETA1 ** t
    correction2 = 1.0 - ADAM_BETA2 ** t
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)


def batch_gradients(model: MlpModel, X: np.ndarray, y: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """Mean cross-entropy over a batch and its parameter gradients."""
    z = X @ model.W1.T + model.b1
    hidden = np.maximum(z, 0.0)
    logits = hidden @ model.W2.T + model.b2
    probs = softmax(logits)
    rows = np.arange(len(y))
    top = np.max(logits, axis=1)
    log_sum = top + np.log(np.sum(np.exp(logits - top[:, None]), axis=1))
    loss = float(np.mean(log_sum - logits[rows, y]))

    grad_logits = probs
    grad_logits[rows, y] -= 1.0
    grad_logits /= len(y)
    grad_W2 = grad_logits.T @ hidden
    grad_b2 = grad_logits.sum(axis=0)
    grad_z = (grad_logits @ model.W2) * (z > 0.0)
    grad_W1 = grad_z.T @ X
    grad_b1 = grad_z.sum(axis=0)
    return loss, [grad_W1, grad_b1, grad_W2, grad_b2]


def train(
    model: MlpModel,
    state: AdamState,
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> Tuple[MlpModel, AdamState]:
    """Run ``cfg.epochs`` shuffled minibatch passes of Adam over the labeled rows.

    The inputs are not mutated; updated copies are returned.

    Parameters
    ----------
    model : MlpModel
        Starting parameters
    state : AdamState
        Starting optimizer state
    features : np.ndarray
        Training rows, shape ``(n, input_dim)``
    labels : np.ndarray
        Class per row, shape ``(n,)``
    cfg : TrainConfig
        Epochs, batch size, learning rate and shuffle seed

    Returns
    -------
    Tuple[MlpModel, AdamState]
        Trained model and optimizer state
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise InvalidArgumentError("cannot train on an empty dataset")
    if features.shape != (len(labels), model.input_dim):
        raise InvalidArgumentError(
            f"features have shape {features.shape}, expected ({len(labels)}, {model.input_dim})"
        )
    if labels.min() < 0 or labels.max() >= model.num_classes:
        raise InvalidArgumentError("labels outside the model's class range")

    model = model.copy()
    state = state.copy()
    params = list(model.parameters())
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(labels))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = batch_gradients(model, features[batch], labels[batch])
            adam_step(params, grads, state, cfg.learning_rate)
            epoch_loss += loss * len(batch)
        logger.debug(f"epoch {epoch + 1}/{cfg.epochs} loss={epoch_loss / len(labels):.6f}")
    return model, state
