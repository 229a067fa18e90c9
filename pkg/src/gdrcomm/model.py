"""The transmitter/receiver network: assembly, training and persistence.

The network is five blocks: two transmitter dense layers (M -> M relu,
M -> n identity), a batch-normalization layer on the n transmit dimensions
(this is what holds average transmit power near 1), and a two-layer receiver
(n -> M relu, M -> M softmax). Training runs encode -> transmit -> AWGN ->
receive -> cross-entropy with fresh noise on every batch presentation, and a
single seed determines weight init, message order and noise draws, so loss
histories are bit-reproducible within one build.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import RngStream, gaussian_noise, noise_variance
from .codec import GdrCodec
from .errors import DivergenceError, ModelFileError, ShapeError
from .fileio import write_text_atomic
from .nn import (AdamState, BatchNormLayer, DenseLayer, affine_backward,
                 mean_cross_entropy, relu, softmax)

MODEL_MAGIC = "GDRAE1"

# Stream ids carved out of the run seed; evaluation sweeps use their own
# per-point ids (see analysis).
INIT_STREAM = 0
TRAIN_DATA_STREAM = 1
TRAIN_NOISE_STREAM = 2


@dataclass
class ModelMeta:
    M: int
    n: int
    m: int
    trained_ebn0_db: float
    seed: int


@dataclass
class ModelParams:
    tx_dense1: DenseLayer
    tx_dense2: DenseLayer
    norm: BatchNormLayer
    rx_dense: DenseLayer
    rx_out: DenseLayer
    meta: ModelMeta


@dataclass
class TrainingConfig:
    epochs: int = 150
    batch_size: int = 45
    train_samples: int = 20_000
    test_samples: int = 1_000_000
    trained_ebn0_db: float = 0.0
    learning_rate: float = 1e-3
    seed: int = 1


@dataclass
class ParamCounts:
    """Trainable-parameter counts grouped by network block."""

    dense: int
    norm: int
    relu: int
    softmax: int

    @property
    def total(self) -> int:
        return self.dense + self.norm + self.relu + self.softmax


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, consumed by :func:`backward`."""

    s: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    x: np.ndarray
    bn: object
    y: np.ndarray
    z3: np.ndarray
    h2: np.ndarray
    p: np.ndarray


def build_model(M: int, n: int, seed: int, m: int = 1,
                trained_ebn0_db: float = 0.0) -> ModelParams:
    """Fresh seeded model; weights Glorot-uniform, biases zero."""
    if M < 2:
        raise ValueError(f"vector size M must be >= 2, got {M}")
    if n < 1:
        raise ValueError(f"channel uses n must be >= 1, got {n}")
    rng = RngStream(seed, INIT_STREAM)
    return ModelParams(
        tx_dense1=DenseLayer.glorot(M, M, "relu", rng),
        tx_dense2=DenseLayer.glorot(M, n, "identity", rng),
        norm=BatchNormLayer(n),
        rx_dense=DenseLayer.glorot(n, M, "relu", rng),
        rx_out=DenseLayer.glorot(M, M, "softmax", rng),
        meta=ModelMeta(M=M, n=n, m=m, trained_ebn0_db=trained_ebn0_db,
                       seed=seed),
    )


def count_params(model: ModelParams) -> ParamCounts:
    """Trainable counts per block; running statistics are excluded."""
    return ParamCounts(
        dense=model.tx_dense1.param_count + model.tx_dense2.param_count,
        norm=model.norm.param_count,
        relu=model.rx_dense.param_count,
        softmax=model.rx_out.param_count,
    )


def trainable_params(model: ModelParams) -> dict[str, np.ndarray]:
    """Name -> array views of every trainable parameter."""
    return {
        "tx_dense1.weights": model.tx_dense1.weights,
        "tx_dense1.bias": model.tx_dense1.bias,
        "tx_dense2.weights": model.tx_dense2.weights,
        "tx_dense2.bias": model.tx_dense2.bias,
        "norm.gamma": model.norm.gamma,
        "norm.beta": model.norm.beta,
        "rx_dense.weights": model.rx_dense.weights,
        "rx_dense.bias": model.rx_dense.bias,
        "rx_out.weights": model.rx_out.weights,
        "rx_out.bias": model.rx_out.bias,
    }


def forward(model: ModelParams, S: np.ndarray, noise: np.ndarray,
            training: bool, update_stats: bool = True):
    """End-to-end pass over a (B, M) batch with a given (B, n) noise draw.

    Returns the (B, M) probability batch and the cache for backward.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    noise = np.asarray(noise, dtype=np.float64)
    z1 = model.tx_dense1.affine(S)
    h1 = relu(z1)
    z2 = model.tx_dense2.affine(h1)
    x, bn = model.norm.forward_cached(z2, training, update_stats)
    if noise.shape != x.shape:
        raise ShapeError(
            f"noise shape {noise.shape} != transmit shape {x.shape}")
    y = x + noise
    z3 = model.rx_dense.affine(y)
    h2 = relu(z3)
    p = softmax(model.rx_out.affine(h2), axis=1)
    return p, ForwardCache(s=S, z1=z1, h1=h1, x=x, bn=bn, y=y, z3=z3,
                           h2=h2, p=p)


def backward(model: ModelParams, cache: ForwardCache,
             targets: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of the batch-mean cross-entropy for every trainable
    parameter. Softmax and loss are fused: dL/dlogits = (p - s) / B."""
    if cache is None:
        raise RuntimeError("backward requires the cache of a forward pass")
    S = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    B = S.shape[0]
    dlogits = (cache.p - S) / B
    dh2, dw4, db4 = affine_backward(model.rx_out, cache.h2, dlogits)
    dz3 = dh2 * (cache.z3 > 0)
    dy, dw3, db3 = affine_backward(model.rx_dense, cache.y, dz3)
    # channel noise is additive, so the gradient passes through unchanged
    dz2, dgamma, dbeta = model.norm.backward(cache.bn, dy)
    dh1, dw2, db2 = affine_backward(model.tx_dense2, cache.h1, dz2)
    dz1 = dh1 * (cache.z1 > 0)
    _, dw1, db1 = affine_backward(model.tx_dense1, cache.s, dz1)
    return {
        "tx_dense1.weights": dw1, "tx_dense1.bias": db1,
        "tx_dense2.weights": dw2, "tx_dense2.bias": db2,
        "norm.gamma": dgamma, "norm.beta": dbeta,
        "rx_dense.weights": dw3, "rx_dense.bias": db3,
        "rx_out.weights": dw4, "rx_out.bias": db4,
    }


def transmit(model: ModelParams, s_vec: np.ndarray, training: bool = False,
             strict_power: bool = False) -> np.ndarray:
    """Map codewords to channel symbols (the transmitter half).

    Accepts one vector or a batch. ``strict_power`` rescales every symbol
    to exactly sqrt(n) Euclidean norm (per-dimension unit power); by default
    the normalization layer is trusted to hold power near 1 statistically.
    """
    single = np.ndim(s_vec) == 1
    S = np.atleast_2d(np.asarray(s_vec, dtype=np.float64))
    h1 = model.tx_dense1.forward(S)
    z2 = model.tx_dense2.affine(h1)
    x = model.norm.forward(z2, training)
    if strict_power:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        scale = np.sqrt(model.meta.n) / np.where(norms > 0, norms, 1.0)
        x = x * np.where(norms > 0, scale, 1.0)
    return x[0] if single else x


def receive(model: ModelParams, y: np.ndarray) -> np.ndarray:
    """Map received symbols to probability vectors (the receiver half)."""
    single = np.ndim(y) == 1
    Y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    p = model.rx_out.forward(model.rx_dense.forward(Y))
    return p[0] if single else p


def transmit_power(model: ModelParams, codec: GdrCodec) -> np.ndarray:
    """Per-dimension mean square of the transmit symbols over all messages.

    Diagnostic for the soft power constraint E{x_j^2} <= 1; batch
    normalization enforces it statistically, not exactly.
    """
    x = transmit(model, codec.codebook(), training=False)
    return np.mean(x * x, axis=0)


def train(model: ModelParams, codec: GdrCodec,
          config: TrainingConfig) -> tuple[ModelParams, list[float]]:
    """Train in place with the standard recipe; returns per-epoch mean loss.

    Message data is drawn once from the seed and reshuffled every epoch;
    channel noise is fresh on every batch presentation. The final short
    batch of an epoch is trained as-is.
    """
    if codec.M != model.meta.M or codec.n != model.meta.n:
        raise ShapeError(
            f"codec (M={codec.M}, n={codec.n}) does not match model "
            f"(M={model.meta.M}, n={model.meta.n})")
    rng_data = RngStream(config.seed, TRAIN_DATA_STREAM)
    rng_noise = RngStream(config.seed, TRAIN_NOISE_STREAM)
    msgs = rng_data.integers(codec.num_messages, size=config.train_samples)
    book = codec.codebook()
    sigma2 = noise_variance(codec.data_rate(), config.trained_ebn0_db)
    params = trainable_params(model)
    opt = AdamState.for_params(params, config.learning_rate)
    history: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng_data.permutation(config.train_samples)
        epoch_loss = 0.0
        for start in range(0, config.train_samples, config.batch_size):
            idx = order[start:start + config.batch_size]
            S = book[msgs[idx]]
            noise = gaussian_noise(rng_noise, sigma2,
                                   (idx.size, model.meta.n))
            P, cache = forward(model, S, noise, training=True)
            loss = mean_cross_entropy(S, P)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"training loss diverged at epoch {epoch}")
            grads = backward(model, cache, S)
            opt.step(params, grads)
            epoch_loss += loss * idx.size
        history.append(epoch_loss / config.train_samples)
    model.meta.m = codec.m
    model.meta.trained_ebn0_db = config.trained_ebn0_db
    model.meta.seed = config.seed
    return model, history


# ---------------------------------------------------------------------------
# Persistence: line-oriented text, floats at 17 significant digits so every
# 64-bit parameter reloads bit-identically.

_LAYER_SPECS = (
    ("tx_dense1", "relu"),
    ("tx_dense2", "identity"),
    ("norm", "batchnorm"),
    ("rx_dense", "relu"),
    ("rx_out", "softmax"),
)


def _fmt_row(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def save_model(model: ModelParams, path) -> None:
    meta = model.meta
    lines = [MODEL_MAGIC,
             f"M={meta.M}",
             f"n={meta.n}",
             f"m={meta.m}",
             f"trained_ebn0_db={float(meta.trained_ebn0_db)!r}",
             f"seed={meta.seed}"]
    for name, kind in _LAYER_SPECS:
        lines.append(f"layer {name} {kind}")
        if kind == "batchnorm":
            norm = model.norm
            for label, vec, extra in (
                    ("gamma", norm.gamma, ""),
                    ("beta", norm.beta, ""),
                    ("running_mean", norm.running_mean, " nontrainable"),
                    ("running_var", norm.running_var, " nontrainable")):
                lines.append(f"{label} {vec.size}{extra}")
                lines.append(_fmt_row(vec))
        else:
            layer: DenseLayer = getattr(model, name)
            lines.append(f"weights {layer.out_dim} {layer.in_dim}")
            for row in layer.weights:
                lines.append(_fmt_row(row))
            lines.append(f"bias {layer.bias.size}")
            lines.append(_fmt_row(layer.bias))
    write_text_atomic(path, "\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path):
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    @property
    def lineno(self) -> int:
        return self.pos  # 1-based number of the line just consumed

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise ModelFileError(f"unexpected end of file, expected {what}",
                                 line=len(self.lines) + 1)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def floats(self, count: int, what: str) -> np.ndarray:
        line = self.next(what)
        try:
            values = np.array([float(tok) for tok in line.split()])
        except ValueError:
            raise ModelFileError(f"malformed float in {what}",
                                 line=self.lineno) from None
        if values.size != count:
            raise ModelFileError(
                f"expected {count} values for {what}, got {values.size}",
                line=self.lineno)
        return values


def _read_header_int(reader: _Reader, key: str) -> int:
    line = reader.next(f"{key}=")
    if not line.startswith(f"{key}="):
        raise ModelFileError(f"expected {key}=..., got {line!r}",
                             line=reader.lineno)
    try:
        return int(line.split("=", 1)[1])
    except ValueError:
        raise ModelFileError(f"malformed integer for {key}",
                             line=reader.lineno) from None


def load_model(path) -> ModelParams:
    """Parse and validate a saved model; raises before building on any
    malformed or truncated input, so there is never a partial model."""
    reader = _Reader(path)
    if reader.next("magic") != MODEL_MAGIC:
        raise ModelFileError(f"bad magic, expected {MODEL_MAGIC}", line=1)
    M = _read_header_int(reader, "M")
    n = _read_header_int(reader, "n")
    m = _read_header_int(reader, "m")
    line = reader.next("trained_ebn0_db=")
    if not line.startswith("trained_ebn0_db="):
        raise ModelFileError(f"expected trained_ebn0_db=..., got {line!r}",
                             line=reader.lineno)
    try:
        trained_db = float(line.split("=", 1)[1])
    except ValueError:
        raise ModelFileError("malformed float for trained_ebn0_db",
                             line=reader.lineno) from None
    seed = _read_header_int(reader, "seed")

    dims = {"tx_dense1": (M, M), "tx_dense2": (n, M),
            "rx_dense": (M, n), "rx_out": (M, M)}
    dense: dict[str, DenseLayer] = {}
    norm = None
    for name, kind in _LAYER_SPECS:
        header = reader.next("layer header")
        if header != f"layer {name} {kind}":
            raise ModelFileError(
                f"expected 'layer {name} {kind}', got {header!r}",
                line=reader.lineno)
        if kind == "batchnorm":
            vecs = {}
            for label, extra in (("gamma", ""), ("beta", ""),
                                 ("running_mean", " nontrainable"),
                                 ("running_var", " nontrainable")):
                head = reader.next(f"{label} header")
                if head != f"{label} {n}{extra}":
                    raise ModelFileError(
                        f"layer norm: expected '{label} {n}{extra}', "
                        f"got {head!r}", line=reader.lineno)
                vecs[label] = reader.floats(n, f"norm {label}")
            norm = BatchNormLayer(n)
            norm.gamma = vecs["gamma"]
            norm.beta = vecs["beta"]
            norm.running_mean = vecs["running_mean"]
            norm.running_var = vecs["running_var"]
        else:
            out_dim, in_dim = dims[name]
            head = reader.next("weights header")
            if head != f"weights {out_dim} {in_dim}":
                raise ModelFileError(
                    f"layer {name}: expected 'weights {out_dim} {in_dim}', "
                    f"got {head!r}", line=reader.lineno)
            rows = [reader.floats(in_dim, f"{name} weights row")
                    for _ in range(out_dim)]
            head = reader.next("bias header")
            if head != f"bias {out_dim}":
                raise ModelFileError(
                    f"layer {name}: expected 'bias {out_dim}', got {head!r}",
                    line=reader.lineno)
            bias = reader.floats(out_dim, f"{name} bias")
            dense[name] = DenseLayer(np.array(rows), bias, kind)
    if reader.pos != len(reader.lines):
        raise ModelFileError("trailing content after last layer",
                             line=reader.pos + 1)
    return ModelParams(
        tx_dense1=dense["tx_dense1"], tx_dense2=dense["tx_dense2"],
        norm=norm, rx_dense=dense["rx_dense"], rx_out=dense["rx_out"],
        meta=ModelMeta(M=M, n=n, m=m, trained_ebn0_db=trained_db, seed=seed),
    )
