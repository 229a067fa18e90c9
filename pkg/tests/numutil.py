"""Numerical oracles shared by the unit and acceptance tests."""

import math

import numpy as np

from gdrcomm.model import forward, trainable_params
from gdrcomm.nn import mean_cross_entropy


def finite_difference_grads(model, S, noise, h=1e-5):
    """Central-difference gradients of the batch-mean loss, parameter by
    parameter. Independent of the analytic backward pass."""

    def loss():
        P, _ = forward(model, S, noise, training=True, update_stats=False)
        return mean_cross_entropy(S, P)

    grads = {}
    for name, p in trainable_params(model).items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = p[ix]
            p[ix] = orig + h
            up = loss()
            p[ix] = orig - h
            down = loss()
            p[ix] = orig
            g[ix] = (up - down) / (2 * h)
        grads[name] = g
    return grads


def max_rel_err(analytic: dict, numeric: dict, floor=1e-6) -> float:
    """Worst relative error across parameter sets.

    The floor turns the comparison into an absolute one below the
    finite-difference noise level (~1e-11 at h=1e-5 on O(1) losses).
    """
    worst = 0.0
    for name, a in analytic.items():
        b = numeric[name]
        err = np.abs(a - b) / np.maximum(floor, np.abs(a) + np.abs(b))
        worst = max(worst, float(err.max()))
    return worst


def wilson_interval(errors: int, n: int, z: float = 1.96):
    """95% Wilson score interval for a binomial proportion."""
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half
