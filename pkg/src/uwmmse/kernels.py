"""Hot numeric kernels: classical WMMSE sweeps and the unfolded forward pass.

Both kernels are written in a numba-friendly subset of numpy and compiled with
@njit by default. Set UWMMSE_NO_NUMBA=1 before import to run the identical
source as plain Python/numpy (useful for debugging and for the numba-vs-numpy
benchmark in benchmarks/).

Numerical note: with the MMSE receiver gain u, the w-update denominator
satisfies 1 - u_i h_ii v_i = (s2 + cross_i) / (s2 + direct_i + cross_i) with
direct/cross the own-signal and interference powers. The kernels evaluate that
ratio directly instead of the literal 1 - u h v, which cancels catastrophically
in low noise and would amplify roundoff by the SINR (~1e8 at sigma = 2.6e-5).
All callers must therefore pass the interference matrix with a zeroed diagonal
(g_off) alongside the direct gains.
"""

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("UWMMSE_NO_NUMBA", "0") not in ("1", "true", "yes")

if NUMBA_ENABLED:
    from numba import njit
else:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


V_DENOM_EPS = 1e-12


def split_gains(h: np.ndarray):
    """(g_off, hd, g_t): squared off-diagonal gains, direct amplitude gains,
    and the transposed full squared-gain matrix, as the kernels expect."""
    g = h ** 2
    hd = np.diag(h).copy()
    g_off = g.copy()
    np.fill_diagonal(g_off, 0.0)
    return g_off, hd, g.T.copy()


@njit(cache=True)
def wmmse_sweeps(g_off, hd, g_t, sigma2, sqrt_pmax, v0, n_iter):
    """n_iter full (u, w, v) block-coordinate sweeps with unit weights.
    Returns per-sweep (U, W, V) arrays of shape (n_iter, M)."""
    m = g_off.shape[0]
    us = np.empty((n_iter, m))
    ws = np.empty((n_iter, m))
    vs = np.empty((n_iter, m))
    v = v0.copy()
    for k in range(n_iter):
        direct = (hd * v) ** 2
        rest = sigma2 + g_off @ (v * v)
        u = (hd * v) / (rest + direct)
        w = (rest + direct) / rest
        raw = (u * hd * w) / (g_t @ (u * u * w) + V_DENOM_EPS)
        v = np.minimum(np.maximum(raw, 0.0), sqrt_pmax)
        us[k] = u
        ws[k] = w
        vs[k] = v
    return us, ws, vs


@njit(cache=True)
def wmmse_power(g_off, hd, g_t, sigma2, sqrt_pmax, n_iter):
    """Final power vector after n_iter sweeps from v0 = sqrt(p_max)*1.
    Trace-free fast path for benchmarking and batch evaluation."""
    m = g_off.shape[0]
    v = np.full(m, sqrt_pmax)
    for _ in range(n_iter):
        direct = (hd * v) ** 2
        rest = sigma2 + g_off @ (v * v)
        u = (hd * v) / (rest + direct)
        w = (rest + direct) / rest
        raw = (u * hd * w) / (g_t @ (u * u * w) + V_DENOM_EPS)
        v = np.minimum(np.maximum(raw, 0.0), sqrt_pmax)
    return v * v


@njit(cache=True)
def gcn_psi(a_hat, x0, w1, b1, w2, b2):
    """Two-layer graph convolution: relu hidden, linear output head."""
    h1 = a_hat @ (x0 @ w1)
    h1 = np.maximum(h1 + b1, 0.0)
    out = a_hat @ (h1 @ w2)
    return out[:, 0] + b2[0]


@njit(cache=True)
def unfolded_forward(g_off, hd, g_t, sigma2, sqrt_pmax, a_hat, x0,
                     w1a, b1a, w2a, b2a, w1b, b1b, w2b, b2b):
    """Inference-only unfolded forward pass over K layers.

    Per-layer GCN parameters are stacked along axis 0; layer k uses the
    (a, b) pair (w1a[k], ..., b2b[k]). Returns the final power vector.
    """
    n_layers = w1a.shape[0]
    m = g_off.shape[0]
    v = np.full(m, sqrt_pmax)
    for k in range(n_layers):
        a = gcn_psi(a_hat, x0, w1a[k], b1a[k], w2a[k], b2a[k])
        b = gcn_psi(a_hat, x0, w1b[k], b1b[k], w2b[k], b2b[k])
        direct = (hd * v) ** 2
        rest = sigma2 + g_off @ (v * v)
        u = (hd * v) / (rest + direct)
        w = a * ((rest + direct) / rest) + b
        raw = (u * hd * w) / (g_t @ (u * u * w) + V_DENOM_EPS)
        v = np.minimum(np.maximum(raw, 0.0), sqrt_pmax)
    return v * v
