"""Minimal dense-network kernel: layers, loss and the Adam optimizer.

Just enough machinery to express the transmitter/receiver network: dense
layers with identity/relu/softmax activations, batch normalization with
running statistics, categorical cross-entropy and exact analytic gradients.
All math is float64 on caller-owned numpy buffers; nothing here keeps hidden
forward state, so a model can be read concurrently while a single control
thread trains it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import RngStream
from .errors import ShapeError

ACTIVATIONS = ("identity", "relu", "softmax")

#: Floor applied to probabilities inside the log; softmax output is strictly
#: positive, so this only fires on hand-built degenerate inputs.
PROB_FLOOR = 1e-30


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with max-subtraction so overflow cannot occur.

    Works on a single vector or row-wise on a batch. Output entries lie in
    (0, 1] and each (row) sum is 1 to within accumulated rounding.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax input contains non-finite entries")
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def cross_entropy(s: np.ndarray, p: np.ndarray) -> float:
    """Categorical cross-entropy -sum_i s_i * log(p_i), natural log.

    Probabilities at or below zero where ``s`` has mass are clamped to
    ``PROB_FLOOR`` and reported through a RuntimeWarning; softmax output
    never triggers this.
    """
    s = np.asarray(s, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if s.shape != p.shape:
        raise ShapeError(f"target shape {s.shape} != probability shape {p.shape}")
    if np.any((p <= 0) & (s > 0)):
        warnings.warn(
            "cross_entropy clamped non-positive probabilities on the target "
            "support to 1e-30", RuntimeWarning, stacklevel=2)
    logp = np.log(np.maximum(p, PROB_FLOOR))
    return float(-np.sum(s * logp))


def mean_cross_entropy(S: np.ndarray, P: np.ndarray) -> float:
    """Mean cross-entropy over the rows of a batch."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2:
        raise ShapeError(f"expected a 2-D batch, got shape {S.shape}")
    return cross_entropy(S, P) / S.shape[0]


class DenseLayer:
    """Fully connected layer: activation(x @ W.T + b).

    ``weights`` has shape (out, in); ``bias`` has length out.
    """

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {weights.shape}")
        if bias.shape != (weights.shape[0],):
            raise ShapeError(
                f"bias shape {bias.shape} != (out,) = ({weights.shape[0]},)")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @classmethod
    def glorot(cls, in_dim: int, out_dim: int, activation: str,
               rng: RngStream) -> "DenseLayer":
        """Glorot-uniform weights, zero bias."""
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def affine(self, batch: np.ndarray) -> np.ndarray:
        """Pre-activation x @ W.T + b for a (B, in) batch."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.in_dim:
            raise ShapeError(
                f"input shape {batch.shape} incompatible with weights "
                f"{self.weights.shape} (expected (B, {self.in_dim}))")
        return batch @ self.weights.T + self.bias

    def forward(self, batch: np.ndarray) -> np.ndarray:
        z = self.affine(batch)
        if self.activation == "relu":
            return relu(z)
        if self.activation == "softmax":
            return softmax(z, axis=1)
        return z


def affine_backward(layer: DenseLayer, x: np.ndarray, dz: np.ndarray):
    """Gradients of the affine part given dL/d(pre-activation).

    Returns (dx, dW, db).
    """
    dw = dz.T @ x
    db = dz.sum(axis=0)
    dx = dz @ layer.weights
    return dx, dw, db


@dataclass
class BnCache:
    """Intermediates of one train-mode batchnorm forward pass."""

    xhat: np.ndarray
    inv_std: np.ndarray


class BatchNormLayer:
    """Per-feature batch normalization with running statistics.

    Train mode normalizes by batch statistics (biased variance) and updates
    the running mean/variance by exponential moving average; inference mode
    is the fixed affine map built from the running statistics. gamma and
    beta are trainable; the running statistics are not.
    """

    def __init__(self, dim: int, momentum: float = 0.99,
                 epsilon: float = 1e-3):
        if not 0.0 < momentum < 1.0:
            raise ValueError(f"momentum must lie in (0, 1), got {momentum}")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.epsilon = epsilon

    @property
    def dim(self) -> int:
        return self.gamma.size

    @property
    def param_count(self) -> int:
        return self.gamma.size + self.beta.size

    def forward(self, batch: np.ndarray, training: bool,
                update_stats: bool = True) -> np.ndarray:
        out, _ = self.forward_cached(batch, training, update_stats)
        return out

    def forward_cached(self, batch: np.ndarray, training: bool,
                       update_stats: bool = True):
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ShapeError(
                f"input shape {batch.shape} incompatible with feature "
                f"dimension {self.dim}")
        if not training:
            inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
            xhat = (batch - self.running_mean) * inv_std
            return self.gamma * xhat + self.beta, None
        if batch.shape[0] < 2:
            raise ValueError(
                f"train-mode batch normalization needs at least 2 rows, "
                f"got {batch.shape[0]}")
        mean = batch.mean(axis=0)
        var = batch.var(axis=0)
        if update_stats:
            self.running_mean = (self.momentum * self.running_mean
                                 + (1.0 - self.momentum) * mean)
            self.running_var = (self.momentum * self.running_var
                                + (1.0 - self.momentum) * var)
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (batch - mean) * inv_std
        return self.gamma * xhat + self.beta, BnCache(xhat=xhat, inv_std=inv_std)

    def backward(self, cache: BnCache, dy: np.ndarray):
        """Train-mode gradients through the batch statistics.

        Returns (dx, dgamma, dbeta).
        """
        if cache is None:
            raise RuntimeError(
                "batchnorm backward requires the cache of a train-mode "
                "forward pass")
        xhat, inv_std = cache.xhat, cache.inv_std
        B = xhat.shape[0]
        dgamma = np.sum(dy * xhat, axis=0)
        dbeta = np.sum(dy, axis=0)
        dxhat = dy * self.gamma
        dx = (inv_std / B) * (B * dxhat
                              - dxhat.sum(axis=0)
                              - xhat * np.sum(dxhat * xhat, axis=0))
        return dx, dgamma, dbeta


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for a named parameter set."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, learning_rate: float = 1e-3) -> "AdamState":
        state = cls(learning_rate=learning_rate)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state

    def step(self, params: dict, grads: dict) -> None:
        """One in-place Adam update; aborts before touching any parameter
        if a gradient is non-finite."""
        for name, g in grads.items():
            if params[name].shape != g.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} != parameter shape "
                    f"{params[name].shape} for {name!r}")
            if not np.all(np.isfinite(g)):
                raise ValueError(f"non-finite gradient for parameter {name!r}")
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            step = (self.learning_rate * (m / bias1)
                    / (np.sqrt(v / bias2) + self.epsilon))
            params[name] -= step
