"""K-layer unfolded WMMSE with GCN-generated per-layer affine weight terms.

Each layer runs one classical (u, w, v) sweep, except that the w-update is
w_i = a_i / (1 - u_i h_ii v_i) + b_i with per-layer vectors a, b produced by
two GCNs from the channel matrix. The saturation on v makes the output power
feasible for every parameter value. With a = 1, b = 0 the forward pass is
exactly the truncated classical solver, which is how fresh models are
initialized.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .channel import ChannelMatrix
from .errors import ParamFileError
from .gcn import GcnParams, gcn_forward, gcn_forward_np, normalize_adjacency, node_features
from .rates import PowerAllocation

PARAM_FORMAT = "uwmmse-params"
PARAM_VERSION = 1
DEFAULT_LAYERS = 4


@dataclass
class ModelParams:
    """All trainable state plus the physical constants it was built for."""

    layers: list[tuple[GcnParams, GcnParams]]  # (theta_a, theta_b) per layer
    p_max: float
    sigma: float

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def tensors(self) -> list[ad.Tensor]:
        out = []
        for theta_a, theta_b in self.layers:
            out.extend(theta_a.tensors())
            out.extend(theta_b.tensors())
        return out

    def copy(self) -> "ModelParams":
        layers = [
            (
                GcnParams(*[ad.Tensor(t.data.copy(), requires_grad=True) for t in a.tensors()]),
                GcnParams(*[ad.Tensor(t.data.copy(), requires_grad=True) for t in b.tensors()]),
            )
            for a, b in self.layers
        ]
        return ModelParams(layers=layers, p_max=self.p_max, sigma=self.sigma)


@dataclass
class LayerTrace:
    """Per-layer intermediate vectors from an inference forward pass."""

    a: np.ndarray  # (K, M)
    b: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    p: np.ndarray  # (M,)


def init_model(n_layers: int, p_max: float, sigma: float, seed: int) -> ModelParams:
    """Identity-initialized model: forward == truncated classical solver."""
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")
    layers = []
    for k in range(n_layers):
        theta_a = _init_layer(seed, 2 * k, "identity_unfold_a")
        theta_b = _init_layer(seed, 2 * k + 1, "identity_unfold_b")
        layers.append((theta_a, theta_b))
    return ModelParams(layers=layers, p_max=float(p_max), sigma=float(sigma))


def _init_layer(seed: int, offset: int, mode: str) -> GcnParams:
    from .gcn import init_params

    # distinct hidden weights per layer: fold the layer offset into the seed
    return init_params(seed * 1000 + offset, mode=mode)


def forward(ch: ChannelMatrix, params: ModelParams) -> tuple[PowerAllocation, LayerTrace]:
    """Inference forward pass (no tape). Uses the compiled kernel for the
    unfold loop; the trace is recomputed cheaply in numpy."""
    _check(ch, params)
    g_off, hd, g_t = kernels.split_gains(ch.h)
    sigma2 = ch.sigma ** 2
    sp = np.sqrt(params.p_max)
    m = ch.n_pairs
    k = params.n_layers
    trace = LayerTrace(
        a=np.empty((k, m)), b=np.empty((k, m)), u=np.empty((k, m)),
        w=np.empty((k, m)), v=np.empty((k, m)), p=np.empty(m),
    )
    v = np.full(m, sp)
    for i, (theta_a, theta_b) in enumerate(params.layers):
        a = gcn_forward_np(ch.h, theta_a)
        b = gcn_forward_np(ch.h, theta_b)
        direct = (hd * v) ** 2
        rest = sigma2 + g_off @ (v * v)
        u = (hd * v) / (rest + direct)
        w = a * ((rest + direct) / rest) + b
        raw = (u * hd * w) / (g_t @ (u * u * w) + kernels.V_DENOM_EPS)
        v = np.minimum(np.maximum(raw, 0.0), sp)
        trace.a[i], trace.b[i], trace.u[i], trace.w[i], trace.v[i] = a, b, u, w, v
    trace.p = np.minimum(v ** 2, params.p_max)
    return PowerAllocation(p=trace.p, p_max=params.p_max), trace


def forward_power(ch: ChannelMatrix, params: ModelParams) -> np.ndarray:
    """Trace-free fast inference through the compiled kernel."""
    _check(ch, params)
    stacks = _stacked(params)
    g_off, hd, g_t = kernels.split_gains(ch.h)
    p = kernels.unfolded_forward(
        g_off, hd, g_t, ch.sigma ** 2, np.sqrt(params.p_max),
        normalize_adjacency(ch.h), node_features(ch.h), *stacks,
    )
    return np.minimum(p, params.p_max)


def inference_fn(params: ModelParams):
    """Bind `params` into a single-argument solver: channel -> power vector.

    Stacks the per-layer parameters for the kernel once, so repeated calls
    skip the per-sample packing cost of `forward_power`. The returned callable
    snapshots the current parameter values."""
    stacks = tuple(a.copy() for a in _stacked(params))
    p_max = params.p_max
    sqrt_p_max = np.sqrt(p_max)

    def solve(ch: ChannelMatrix) -> np.ndarray:
        _check(ch, params)
        g_off, hd, g_t = kernels.split_gains(ch.h)
        p = kernels.unfolded_forward(
            g_off, hd, g_t, ch.sigma ** 2, sqrt_p_max,
            normalize_adjacency(ch.h), node_features(ch.h), *stacks,
        )
        return np.minimum(p, p_max)

    return solve


def forward_tensor(ch: ChannelMatrix, params: ModelParams) -> ad.Tensor:
    """Differentiable forward pass; returns the power vector as a tensor.
    Record it on an active Tape to train."""
    _check(ch, params)
    g_off, hd, g_t = kernels.split_gains(ch.h)
    sp = float(np.sqrt(params.p_max))
    sigma2 = ch.sigma ** 2
    g_off_t = ad.Tensor(g_off)
    g_t_t = ad.Tensor(g_t)
    hd_t = ad.Tensor(hd)
    v = ad.Tensor(np.full(ch.n_pairs, sp))
    for theta_a, theta_b in params.layers:
        a = gcn_forward(ch.h, theta_a)
        b = gcn_forward(ch.h, theta_b)
        direct = ad.square(hd_t * v)
        rest = g_off_t @ (v * v) + sigma2
        u = (hd_t * v) / (rest + direct)
        w = a * ((rest + direct) / rest) + b
        raw = (u * hd_t * w) / (g_t_t @ (u * u * w) + kernels.V_DENOM_EPS)
        v = ad.clamp(raw, 0.0, sp)
    return v * v


def _check(ch: ChannelMatrix, params: ModelParams):
    if np.any(np.diag(ch.h) <= 0):
        raise ValueError("direct gains h_ii must be strictly positive")


def _stacked(params: ModelParams):
    """Per-layer GCN parameters stacked along axis 0 for the kernel."""
    def stack(idx, field):
        return np.stack([getattr(layer[idx], field).data for layer in params.layers])

    return (
        stack(0, "w1"), stack(0, "b1"), stack(0, "w2"), stack(0, "b2"),
        stack(1, "w1"), stack(1, "b1"), stack(1, "w2"), stack(1, "b2"),
    )


# ---------------------------------------------------------------------------
# serialization

def save_params(params: ModelParams, path) -> None:
    doc = {
        "format": PARAM_FORMAT,
        "version": PARAM_VERSION,
        "n_layers": params.n_layers,
        "p_max": params.p_max,
        "sigma": params.sigma,
        "layers": [
            {
                "a": _gcn_to_doc(theta_a),
                "b": _gcn_to_doc(theta_b),
            }
            for theta_a, theta_b in params.layers
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_params(path) -> ModelParams:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParamFileError(f"{path}: malformed JSON at line {exc.lineno}, col {exc.colno}") from exc
    if not isinstance(doc, dict) or doc.get("format") != PARAM_FORMAT:
        raise ParamFileError(f"{path}: not a {PARAM_FORMAT} file")
    if doc.get("version") != PARAM_VERSION:
        raise ParamFileError(f"{path}: version {doc.get('version')} unsupported (want {PARAM_VERSION})")
    try:
        layers = [
            (_gcn_from_doc(layer["a"]), _gcn_from_doc(layer["b"]))
            for layer in doc["layers"]
        ]
        params = ModelParams(layers=layers, p_max=float(doc["p_max"]), sigma=float(doc["sigma"]))
        if len(layers) != int(doc["n_layers"]):
            raise KeyError("n_layers")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParamFileError(f"{path}: missing or inconsistent field ({exc})") from exc
    return params


def _gcn_to_doc(g: GcnParams) -> dict:
    return {
        name: {"shape": list(t.data.shape), "values": t.data.ravel().tolist()}
        for name, t in zip(("w1", "b1", "w2", "b2"), g.tensors())
    }


def _gcn_from_doc(doc: dict) -> GcnParams:
    arrays = []
    for name in ("w1", "b1", "w2", "b2"):
        entry = doc[name]
        arr = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        arrays.append(ad.Tensor(arr, requires_grad=True))
    return GcnParams(*arrays)
