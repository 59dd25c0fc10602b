"""Rate evaluation and independent optimality oracles.

Conventions: the channel matrix stores amplitude gains; every rate or MSE
expression squares them at evaluation time. Link rates use log2, the weighted
MSE surrogate's regularizer uses the natural log (the surrogate is only
compared against itself, so the base choice just rescales it).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix
from .errors import UnsupportedSizeError

GRID_ORACLE_MAX_PAIRS = 3
_STATIONARITY_STEP = 1e-3


@dataclass(frozen=True)
class PowerAllocation:
    """Feasible per-transmitter power vector."""

    p: np.ndarray
    p_max: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if not self.p_max > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        if np.any(p < 0) or np.any(p > self.p_max):
            raise ValueError("power outside [0, p_max]")
        object.__setattr__(self, "p", p)


def _check_dims(ch: ChannelMatrix, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (ch.n_pairs,):
        raise ValueError(f"power vector shape {p.shape} does not match {ch.n_pairs} pairs")
    return p


def link_rates(ch: ChannelMatrix, p: np.ndarray) -> np.ndarray:
    """Per-link Shannon rates log2(1 + SINR_i)."""
    p = _check_dims(ch, p)
    g = ch.h ** 2
    direct = np.diag(g) * p
    interference = g @ p - direct
    return np.log2(1.0 + direct / (ch.sigma ** 2 + interference))


def sum_rate(ch: ChannelMatrix, p: np.ndarray) -> float:
    return float(np.sum(link_rates(ch, p)))


def wmmse_objective(ch: ChannelMatrix, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    """Weighted-MSE surrogate: sum_i (w_i e_i - ln w_i), where e_i is the MSE
    of link i under receiver gain u_i and transmit amplitudes v."""
    u = _check_dims(ch, u)
    v = _check_dims(ch, v)
    w = _check_dims(ch, w)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    g = ch.h ** 2
    hd = np.diag(ch.h)
    cross = g @ (v ** 2) - np.diag(g) * v ** 2  # sum_{j != i} g_ij v_j^2
    e = (1.0 - u * hd * v) ** 2 + ch.sigma ** 2 * u ** 2 + u ** 2 * cross
    return float(np.sum(w * e - np.log(w)))


def _batch_sum_rate(ch: ChannelMatrix, powers: np.ndarray) -> np.ndarray:
    """Sum-rate for each row of a (n, M) power array."""
    g = ch.h ** 2
    gd = np.diag(g)
    direct = powers * gd
    interference = powers @ g.T - direct
    return np.log2(1.0 + direct / (ch.sigma ** 2 + interference)).sum(axis=1)


def grid_oracle(ch: ChannelMatrix, p_max: float, grid_n: int) -> tuple[np.ndarray, float]:
    """Brute-force sum-rate maximizer over the uniform grid
    {0, p_max/grid_n, ..., p_max}^M. Exhaustive, so M <= 3 only."""
    m = ch.n_pairs
    if m > GRID_ORACLE_MAX_PAIRS:
        raise UnsupportedSizeError(f"grid oracle supports up to {GRID_ORACLE_MAX_PAIRS} pairs, got {m}")
    if grid_n < 1:
        raise ValueError(f"grid_n must be >= 1, got {grid_n}")
    axis = np.linspace(0.0, p_max, grid_n + 1)
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    powers = np.stack([a.ravel() for a in grids], axis=1)
    values = _batch_sum_rate(ch, powers)
    best = int(np.argmax(values))
    return powers[best].copy(), float(values[best])


def sum_rate_gradient(ch: ChannelMatrix, p: np.ndarray) -> np.ndarray:
    """Analytic gradient of the sum-rate with respect to the power vector."""
    p = _check_dims(ch, p)
    g = ch.h ** 2
    gd = np.diag(g)
    direct = gd * p
    den = ch.sigma ** 2 + g @ p - direct  # interference + noise per receiver
    total = den + direct
    # d/dp_k [log2(total_i) - log2(den_i)]: own-signal term plus the
    # interference it injects into every other receiver.
    inv_ln2 = 1.0 / np.log(2.0)
    own = gd / total
    off = g.T @ (1.0 / total - 1.0 / den) - gd * (1.0 / total - 1.0 / den)
    return inv_ln2 * (own + off)


def stationarity_residual(ch: ChannelMatrix, p: np.ndarray, p_max: float) -> float:
    """Scaled projected-gradient fixed-point residual; 0 at any point that is
    stationary for sum-rate maximization over the box [0, p_max]^M."""
    p = _check_dims(ch, p)
    grad = sum_rate_gradient(ch, p)
    step = np.clip(p + _STATIONARITY_STEP * grad, 0.0, p_max)
    scale = _STATIONARITY_STEP * max(1.0, float(np.max(np.abs(grad))))
    return float(np.max(np.abs(p - step))) / scale
