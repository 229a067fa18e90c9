"""Experiment harness: BLER sweeps, capacity tables and receiver moments.

Every sweep point gets its own random stream derived from (seed, point
index), so points can run on any number of workers and still merge to the
same grid-ordered result as a serial run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import RngStream, awgn, noise_variance
from .codec import GdrCodec
from .model import ModelParams, receive, trainable_params, train, transmit
from .model import TrainingConfig, build_model

# Evaluation batches are chunked to bound memory; the chunk size is fixed so
# noise draws (and therefore results) do not depend on available memory.
_CHUNK = 8192


@dataclass(frozen=True)
class BlerRecord:
    """One Monte Carlo point of a block-error-rate sweep."""

    ebn0_db: float
    blocks: int
    errors: int

    @property
    def bler(self) -> float:
        return self.errors / self.blocks


def _check_model_finite(model: ModelParams) -> None:
    for name, p in trainable_params(model).items():
        if not np.all(np.isfinite(p)):
            raise RuntimeError(f"model parameter {name!r} is not finite; "
                               "was training aborted?")


def _bler_point(model: ModelParams, codec: GdrCodec, ebn0_db: float,
                blocks: int, rng: RngStream, sigma2_override,
                strict_power: bool) -> int:
    sigma2 = (noise_variance(codec.data_rate(), ebn0_db)
              if sigma2_override is None else sigma2_override)
    msgs = rng.integers(codec.num_messages, size=blocks)
    book = codec.codebook()
    errors = 0
    for start in range(0, blocks, _CHUNK):
        idx = msgs[start:start + _CHUNK]
        x = transmit(model, book[idx], training=False,
                     strict_power=strict_power)
        y = awgn(x, sigma2, rng)
        decoded = codec.decode_batch(receive(model, y))
        errors += int(np.count_nonzero(decoded != idx))
    return errors


def bler_sweep(model: ModelParams, codec: GdrCodec, ebn0_grid_db,
               blocks_per_point: int, seed: int, sigma2_override=None,
               jobs: int = 1, strict_power: bool = False) -> list[BlerRecord]:
    """Simulated block error rate at each Eb/N0 grid point.

    A block error is any decode mismatch, including invalid-codeword
    decodes. ``sigma2_override`` replaces the derived noise variance at
    every point (0 gives a noiseless channel).
    """
    if blocks_per_point < 1000:
        raise ValueError(
            f"blocks_per_point must be >= 1000, got {blocks_per_point}")
    _check_model_finite(model)
    grid = [float(db) for db in ebn0_grid_db]

    def run(item):
        index, db = item
        rng = RngStream(seed, index)
        return _bler_point(model, codec, db, blocks_per_point, rng,
                           sigma2_override, strict_power)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            errors = list(pool.map(run, enumerate(grid)))
    else:
        errors = [run(item) for item in enumerate(grid)]
    return [BlerRecord(ebn0_db=db, blocks=blocks_per_point, errors=err)
            for db, err in zip(grid, errors)]


def trained_snr_study(M: int, m: int, n: int, trained_ebn0_list_db,
                      config: TrainingConfig,
                      jobs: int = 1) -> list[tuple[float, list[float]]]:
    """Loss history per trained Eb/N0, each from an identically-seeded
    fresh model (identical initialization across the list)."""
    points = [float(db) for db in trained_ebn0_list_db]
    if not points:
        raise ValueError("trained Eb/N0 list must be non-empty")

    def run(db: float) -> list[float]:
        model = build_model(M, n, config.seed)
        codec = GdrCodec(M=M, m=m, n=n)
        _, history = train(model, codec, replace(config, trained_ebn0_db=db))
        return history

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            histories = list(pool.map(run, points))
    else:
        histories = [run(db) for db in points]
    return list(zip(points, histories))


def capacity_table(codec: GdrCodec, ebn0_grid_db) -> list[tuple[float, float]]:
    """Channel capacity at each grid point; deterministic, no RNG."""
    grid = [float(db) for db in ebn0_grid_db]
    if not grid:
        raise ValueError("Eb/N0 grid must be non-empty")
    return [(db, codec.capacity(10.0 ** (db / 10.0))) for db in grid]


@dataclass
class MomentReport:
    """Closed-form and (optionally) empirical receiver-output moments.

    For a linear map with rows a_i applied to x plus Gaussian noise of
    variance sigma2, u_i is normal with mean ``e_u[i]`` and variance
    ``d_u[i]``, and e^{u_i} is log-normal with mean ``e_exp[i]`` and
    variance ``d_exp[i]``. Empirical columns are filled only when a Monte
    Carlo run happened; ``overflow[i]`` counts samples where e^{u_i}
    overflowed and was excluded.
    """

    e_u: np.ndarray
    d_u: np.ndarray
    e_exp: np.ndarray
    d_exp: np.ndarray
    emp_e_exp: np.ndarray | None = None
    emp_d_exp: np.ndarray | None = None
    n_samples: int = 0
    overflow: np.ndarray | None = None


def receiver_map(model: ModelParams) -> np.ndarray:
    """The receiver's first-layer weight matrix as a linear map (M x n).

    Deliberately drops the layer's bias and relu: the moment formulas treat
    the receiver front end as purely linear, which is a first-order
    approximation of the actual layer.
    """
    return model.rx_dense.weights.copy()


def _map_and_input(A, x):
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"linear map must be 2-D, got shape {A.shape}")
    if x.shape != (A.shape[1],):
        raise ValueError(
            f"input shape {x.shape} incompatible with map {A.shape}")
    return A, x


def snr_moments(A, x, sigma2: float) -> MomentReport:
    """Closed-form moments of u = A(x + noise) and of e^{u}, per element."""
    A, x = _map_and_input(A, x)
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    e_u = A @ x
    d_u = sigma2 * np.sum(A * A, axis=1)
    # inf is the honest float answer when the log-normal moments overflow
    with np.errstate(over="ignore"):
        e_exp = np.exp(e_u + d_u / 2.0)
        d_exp = np.expm1(d_u) * np.exp(2.0 * e_u + d_u)
    return MomentReport(e_u=e_u, d_u=d_u, e_exp=e_exp, d_exp=d_exp)


def snr_moments_mc(A, x, sigma2: float, n_samples: int,
                   rng: RngStream) -> MomentReport:
    """Monte Carlo estimate of the e^{u_i} moments, alongside the closed
    forms.

    With ``sigma2 == 0`` every draw is identical, so the empirical columns
    equal the (degenerate) closed forms exactly and no sampling happens.
    Overflowing samples are excluded per element and counted in
    ``overflow``.
    """
    report = snr_moments(A, x, sigma2)
    A, x = _map_and_input(A, x)
    if n_samples < 10_000:
        raise ValueError(f"n_samples must be >= 10^4, got {n_samples}")
    report.n_samples = n_samples
    rows = A.shape[0]
    if sigma2 == 0:
        report.emp_e_exp = np.exp(A @ x)
        report.emp_d_exp = np.zeros(rows)
        report.overflow = np.zeros(rows, dtype=np.int64)
        return report
    count = np.zeros(rows)
    total = np.zeros(rows)
    total_sq = np.zeros(rows)
    scale = np.sqrt(sigma2)
    for start in range(0, n_samples, _CHUNK):
        size = min(_CHUNK, n_samples - start)
        noise = rng.normal(size=(size, A.shape[1]), scale=scale)
        with np.errstate(over="ignore"):
            e = np.exp((x + noise) @ A.T)
        # samples whose square would swamp the variance accumulator count
        # as overflowed too; the bound keeps sums of 1e8 of them finite
        finite = np.isfinite(e) & (e < 1e148)
        e = np.where(finite, e, 0.0)
        count += finite.sum(axis=0)
        total += e.sum(axis=0)
        total_sq += (e * e).sum(axis=0)
    mean = total / count
    # unbiased sample variance over the finite subset
    var = (total_sq - count * mean * mean) / (count - 1)
    report.emp_e_exp = mean
    report.emp_d_exp = var
    report.overflow = (n_samples - count).astype(np.int64)
    return report
