"""Dense softmax classifier with cross-entropy loss and Adam.

The model is deliberately small: a fully connected net with ReLU hidden
layers and a softmax head, stored as one flat float64 parameter vector.
All operations are pure functions; randomness enters only through
explicitly passed generators.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import ConfigurationError, ShapeError, TrainingError
from .kernels import PROB_FLOOR, n_weights


@dataclass(frozen=True)
class ModelParams:
    """Layer dims (input, hidden..., classes) plus the flat weight vector."""

    layer_dims: tuple
    weights: np.ndarray

    def __post_init__(self):
        if len(self.layer_dims) < 2 or any(d <= 0 for d in self.layer_dims):
            raise ConfigurationError(f"layer_dims must be >= 2 positive ints, got {self.layer_dims}")
        expected = n_weights(self.layer_dims)
        if self.weights.shape != (expected,):
            raise ShapeError(f"weights must have shape ({expected},), got {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise ShapeError("weights contain NaN or Inf")

    @property
    def num_classes(self):
        return self.layer_dims[-1]

    @property
    def feature_dim(self):
        return self.layer_dims[0]


@dataclass(frozen=True)
class OptimizerState:
    """Adam moments and hyperparameters for one flat parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 5e-4

    def __post_init__(self):
        if self.first_moment.shape != self.second_moment.shape:
            raise ShapeError("moment vectors must have equal shapes")
        if np.any(self.second_moment < 0.0):
            raise ShapeError("second moment must be elementwise nonnegative")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigurationError("betas must lie in (0, 1)")
        if self.learning_rate <= 0.0 or self.epsilon <= 0.0 or self.weight_decay < 0.0:
            raise ConfigurationError("learning_rate/epsilon must be > 0, weight_decay >= 0")


@dataclass(frozen=True)
class Batch:
    """A feature matrix with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ShapeError(f"features must be a nonempty 2-D matrix, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError("labels length must equal the number of feature rows")

    def __len__(self):
        return self.features.shape[0]


def init_params(layer_dims, rng_seed_or_stream) -> ModelParams:
    """Fan-in-scaled uniform weights, zero biases, deterministic per seed.

    Each layer's weights are drawn uniformly from
    [-1/sqrt(in_dim), 1/sqrt(in_dim)).
    """
    layer_dims = tuple(int(d) for d in layer_dims)
    if len(layer_dims) < 2 or any(d <= 0 for d in layer_dims):
        raise ConfigurationError(f"layer_dims must be >= 2 positive ints, got {layer_dims}")
    if isinstance(rng_seed_or_stream, np.random.Generator):
        rng = rng_seed_or_stream
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(rng_seed_or_stream))))
    weights = np.zeros(n_weights(layer_dims), dtype=np.float64)
    offset = 0
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights[offset:offset + fan_in * fan_out] = rng.uniform(-scale, scale, fan_in * fan_out)
        offset += fan_in * fan_out + fan_out  # biases stay zero
    return ModelParams(layer_dims, weights)


def init_adam(params: ModelParams, learning_rate=2e-4, beta1=0.9, beta2=0.999,
              epsilon=1e-8, weight_decay=5e-4) -> OptimizerState:
    zeros = np.zeros_like(params.weights)
    return OptimizerState(zeros, zeros.copy(), 0, learning_rate, beta1, beta2,
                          epsilon, weight_decay)


def _check_features(params: ModelParams, features):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise ShapeError(
            f"features must be (n, {params.feature_dim}), got shape {features.shape}")
    return np.ascontiguousarray(features)


def forward_probs(params: ModelParams, features) -> np.ndarray:
    """Class probability matrix; each row sums to 1."""
    features = _check_features(params, features)
    return kernels.forward_probs(params.layer_dims, params.weights, features)


def predict_proba(params: ModelParams, features) -> np.ndarray:
    """Alias of forward_probs; accepts empty input."""
    return forward_probs(params, features)


def cross_entropy_loss(params: ModelParams, batch: Batch) -> float:
    """Mean over rows of -log p(true class), probabilities floored at 1e-12."""
    features = _check_features(params, batch.features)
    probs = kernels.forward_probs(params.layer_dims, params.weights, features)
    rows = np.arange(len(batch))
    return float(-np.log(np.maximum(probs[rows, batch.labels], PROB_FLOOR)).mean())


def backprop_grad(params: ModelParams, batch: Batch) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. the flat weights."""
    features = _check_features(params, batch.features)
    labels = np.ascontiguousarray(batch.labels, dtype=np.int64)
    _, grad = kernels.loss_and_grad(params.layer_dims, params.weights, features, labels)
    return grad


def adam_update(state: OptimizerState, params: ModelParams, grad) -> tuple:
    """One Adam step. Returns (new_state, new_params)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.weights.shape:
        raise ShapeError(f"grad shape {grad.shape} != weights shape {params.weights.shape}")
    if state.first_moment.shape != params.weights.shape:
        raise ShapeError("optimizer state does not match parameter length")
    step = state.step_count + 1
    new_w, new_m, new_v = kernels.adam_step(
        params.weights, grad, state.first_moment, state.second_moment, step,
        state.learning_rate, state.beta1, state.beta2, state.epsilon,
        state.weight_decay)
    new_state = replace(state, first_moment=new_m, second_moment=new_v, step_count=step)
    return new_state, ModelParams(params.layer_dims, new_w)


def train_local(params: ModelParams, opt_state: OptimizerState, train_data: Batch,
                epochs: int, batch_size: int, rng_stream: np.random.Generator) -> tuple:
    """E epochs of shuffled minibatch Adam; shuffling uses only rng_stream.

    Returns (params, opt_state) after training; epochs=0 is the identity.
    """
    if train_data is None or len(train_data) == 0:
        raise TrainingError("cannot train on an empty labeled set")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    features = _check_features(params, train_data.features)
    labels = np.ascontiguousarray(train_data.labels, dtype=np.int64)
    n = features.shape[0]
    dims = params.layer_dims
    weights = params.weights
    state = opt_state
    for _ in range(epochs):
        order = rng_stream.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb = np.ascontiguousarray(features[idx])
            yb = np.ascontiguousarray(labels[idx])
            _, grad = kernels.loss_and_grad(dims, weights, xb, yb)
            step = state.step_count + 1
            weights, new_m, new_v = kernels.adam_step(
                weights, grad, state.first_moment, state.second_moment, step,
                state.learning_rate, state.beta1, state.beta2, state.epsilon,
                state.weight_decay)
            state = replace(state, first_moment=new_m, second_moment=new_v,
                            step_count=step)
    if epochs == 0:
        return params, opt_state
    return ModelParams(dims, weights), state
