"""Classical WMMSE power allocation by block coordinate descent.

Each sweep updates the MMSE receiver gains u, the MSE weights w, and the
transmit amplitudes v in closed form; powers are v^2. The full solver stops on
relative change of the weighted-MSE surrogate (default 1e-6) or after max_iter
sweeps; the truncated variant runs a fixed number of sweeps.

The public update_* functions implement the textbook update expressions; the
solver loops share the numerically stable reformulation in kernels.py (see the
note there), which is algebraically identical on solver iterates.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelMatrix
from .errors import NumericalDegeneracyError
from .rates import PowerAllocation, sum_rate, wmmse_objective

W_DENOM_EPS = 1e-12
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6


@dataclass
class SolverTrace:
    """Per-sweep iterates and diagnostics."""

    us: np.ndarray          # (iterations_run, M)
    ws: np.ndarray
    vs: np.ndarray
    objective_values: np.ndarray
    sum_rates: np.ndarray
    iterations_run: int


def update_u(ch: ChannelMatrix, v: np.ndarray) -> np.ndarray:
    """MMSE receiver gains given transmit amplitudes v (self term included in
    the denominator sum)."""
    g = ch.h ** 2
    hd = np.diag(ch.h)
    return (hd * v) / (ch.sigma ** 2 + g @ (v * v))


def update_w_classical(ch: ChannelMatrix, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unit-affine MSE weights w_i = 1 / (1 - u_i h_ii v_i)."""
    hd = np.diag(ch.h)
    denom = 1.0 - u * hd * v
    if np.any(denom <= W_DENOM_EPS):
        raise NumericalDegeneracyError(f"w-update denominator collapsed: min={denom.min()}")
    return 1.0 / denom


def update_v(ch: ChannelMatrix, u: np.ndarray, w: np.ndarray, p_max: float) -> np.ndarray:
    """Transmit amplitudes, saturated into [0, sqrt(p_max)]. The denominator
    sums over channels out of transmitter i (transposed gain index)."""
    g = ch.h ** 2
    hd = np.diag(ch.h)
    raw = (u * hd * w) / (g.T @ (u * u * w) + kernels.V_DENOM_EPS)
    return np.clip(raw, 0.0, np.sqrt(p_max))


def _sweep(g_off, hd, g_t, sigma2, sqrt_pmax, v):
    """One stable (u, w, v) sweep; expression-for-expression the same as the
    kernel bodies so python-loop and kernel iterates match bit-exactly."""
    direct = (hd * v) ** 2
    rest = sigma2 + g_off @ (v * v)
    u = (hd * v) / (rest + direct)
    w = (rest + direct) / rest
    raw = (u * hd * w) / (g_t @ (u * u * w) + kernels.V_DENOM_EPS)
    return u, w, np.minimum(np.maximum(raw, 0.0), sqrt_pmax)


def wmmse(ch: ChannelMatrix, p_max: float, max_iter: int = DEFAULT_MAX_ITER,
          tol: float = DEFAULT_TOL) -> tuple[PowerAllocation, SolverTrace]:
    """Full solver: sweeps from v0 = sqrt(p_max)*1 until the surrogate
    objective stalls (|delta| / |obj| < tol) or max_iter is hit."""
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    g_off, hd, g_t = kernels.split_gains(ch.h)
    v = np.full(ch.n_pairs, np.sqrt(p_max))
    us, ws, vs, objs = [], [], [], []
    prev_obj = None
    for _ in range(max_iter):
        u, w, v = _sweep(g_off, hd, g_t, ch.sigma ** 2, np.sqrt(p_max), v)
        us.append(u)
        ws.append(w)
        vs.append(v)
        obj = wmmse_objective(ch, u, v, w)
        objs.append(obj)
        if prev_obj is not None and abs(prev_obj - obj) < tol * abs(obj):
            break
        prev_obj = obj
    n = len(vs)
    trace = SolverTrace(
        us=np.array(us), ws=np.array(ws), vs=np.array(vs),
        objective_values=np.array(objs),
        sum_rates=np.array([sum_rate(ch, np.minimum(vk ** 2, p_max)) for vk in vs]),
        iterations_run=n,
    )
    return PowerAllocation(p=np.minimum(vs[-1] ** 2, p_max), p_max=p_max), trace


def truncated_wmmse(ch: ChannelMatrix, p_max: float, n_iter: int) -> tuple[PowerAllocation, SolverTrace]:
    """Exactly n_iter sweeps, no convergence check."""
    if n_iter < 1:
        raise ValueError(f"n_iter must be >= 1, got {n_iter}")
    g_off, hd, g_t = kernels.split_gains(ch.h)
    v0 = np.full(ch.n_pairs, np.sqrt(p_max))
    us, ws, vs = kernels.wmmse_sweeps(
        g_off, hd, g_t, ch.sigma ** 2, np.sqrt(p_max), v0, n_iter
    )
    trace = SolverTrace(
        us=us, ws=ws, vs=vs,
        objective_values=np.array([wmmse_objective(ch, us[k], vs[k], ws[k]) for k in range(n_iter)]),
        sum_rates=np.array([sum_rate(ch, np.minimum(vs[k] ** 2, p_max)) for k in range(n_iter)]),
        iterations_run=n_iter,
    )
    return PowerAllocation(p=np.minimum(vs[-1] ** 2, p_max), p_max=p_max), trace


def solve_power(ch: ChannelMatrix, p_max: float, n_iter: int) -> np.ndarray:
    """Trace-free fixed-sweep solve (kernel fast path)."""
    g_off, hd, g_t = kernels.split_gains(ch.h)
    return np.minimum(p_max, kernels.wmmse_power(
        g_off, hd, g_t, ch.sigma ** 2, np.sqrt(p_max), n_iter))
