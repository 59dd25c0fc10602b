"""Two-layer graph convolution producing one real output per node.

The channel matrix itself plays the role of the (directed, weighted)
adjacency. It is rescaled by its largest entry and given self-loops, which
keeps the propagation spectrum bounded and preserves permutation equivariance.
Node features are the direct gain h_ii plus a constant-one channel.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .rng import substream

IN_DIM = 2
HIDDEN_DIM = 5
ADJ_EPS = 1e-12

INIT_MODES = ("standard", "identity_unfold_a", "identity_unfold_b")


@dataclass
class GcnParams:
    """Weights of one two-layer GCN; all entries live in autodiff Tensors."""

    w1: ad.Tensor  # (in_dim, hidden)
    b1: ad.Tensor  # (hidden,)
    w2: ad.Tensor  # (hidden, 1)
    b2: ad.Tensor  # (1,)

    def tensors(self) -> list[ad.Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]


def normalize_adjacency(h: np.ndarray) -> np.ndarray:
    """Max-scaled adjacency with self-loops: h / (max + eps) + I."""
    h = np.asarray(h, dtype=np.float64)
    return h / (h.max() + ADJ_EPS) + np.eye(h.shape[0])


def node_features(h: np.ndarray) -> np.ndarray:
    """(M, 2) features: direct gains and a constant-one channel."""
    h = np.asarray(h, dtype=np.float64)
    return np.stack([np.diag(h), np.ones(h.shape[0])], axis=1)


def gcn_forward(h: np.ndarray, params: GcnParams) -> ad.Tensor:
    """Differentiable forward pass; returns a length-M tensor."""
    a_hat = ad.Tensor(normalize_adjacency(h))
    x0 = ad.Tensor(node_features(h))
    h1 = ad.relu(a_hat @ (x0 @ params.w1) + params.b1)
    out = a_hat @ (h1 @ params.w2) + params.b2
    return ad.reshape(out, (h.shape[0],))


def gcn_forward_np(h: np.ndarray, params: GcnParams) -> np.ndarray:
    """Tape-free reference evaluation on raw arrays (inference path)."""
    a_hat = normalize_adjacency(h)
    x0 = node_features(h)
    h1 = np.maximum(a_hat @ (x0 @ params.w1.data) + params.b1.data, 0.0)
    return (a_hat @ (h1 @ params.w2.data))[:, 0] + params.b2.data[0]


def init_params(seed: int, mode: str = "standard", in_dim: int = IN_DIM,
                hidden: int = HIDDEN_DIM) -> GcnParams:
    """Glorot-uniform weights, zero biases. The identity_unfold modes zero the
    output head so the GCN returns exactly 1 (mode a) or 0 (mode b) for any
    input, which makes a fresh unfolded model coincide with the truncated
    classical solver."""
    if mode not in INIT_MODES:
        raise ValueError(f"unknown init mode {mode!r}")
    rng = substream(seed, "training")
    limit1 = np.sqrt(6.0 / (in_dim + hidden))
    limit2 = np.sqrt(6.0 / (hidden + 1))
    w1 = rng.uniform(-limit1, limit1, size=(in_dim, hidden))
    w2 = rng.uniform(-limit2, limit2, size=(hidden, 1))
    b1 = np.zeros(hidden)
    b2 = np.zeros(1)
    if mode == "identity_unfold_a":
        w2 = np.zeros((hidden, 1))
        b2 = np.ones(1)
    elif mode == "identity_unfold_b":
        w2 = np.zeros((hidden, 1))
        b2 = np.zeros(1)
    return GcnParams(
        w1=ad.Tensor(w1, requires_grad=True),
        b1=ad.Tensor(b1, requires_grad=True),
        w2=ad.Tensor(w2, requires_grad=True),
        b2=ad.Tensor(b2, requires_grad=True),
    )
