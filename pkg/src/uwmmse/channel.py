"""Random geometric topologies and Rayleigh-faded channel matrices.

Placement protocol: M transmitters uniform in [-M, M]^2, each paired receiver
uniform in a box of half-width M/4 around its transmitter. Channel gain from
transmitter j into receiver i is ||t_j - r_i||^(-2.2) times an independent
Rayleigh(1) fading amplitude.

Orientation convention: in a ChannelMatrix, h[i, j] is the amplitude gain from
transmitter j at receiver i (row = receiver). `path_gain_matrix` alone is
transmitter-row-indexed (entry (i, j) = gain from transmitter i at receiver j)
and gets transposed on the way into a ChannelMatrix.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .rng import substream

PATHLOSS_EXPONENT = 2.2
MIN_TX_RX_DISTANCE = 1e-6
_REDRAW_RETRIES = 100


@dataclass(frozen=True)
class Topology:
    """Transmitter/receiver positions for M transceiver pairs."""

    tx: np.ndarray  # (M, 2)
    rx: np.ndarray  # (M, 2)
    extent: float   # placement half-width (M at generation time)

    def __post_init__(self):
        tx = np.asarray(self.tx, dtype=np.float64)
        rx = np.asarray(self.rx, dtype=np.float64)
        if tx.ndim != 2 or tx.shape[1] != 2 or tx.shape != rx.shape or tx.shape[0] < 1:
            raise ValueError(f"bad position shapes {tx.shape} / {rx.shape}")
        object.__setattr__(self, "tx", tx)
        object.__setattr__(self, "rx", rx)

    @property
    def n_pairs(self) -> int:
        return self.tx.shape[0]


@dataclass(frozen=True)
class ChannelMatrix:
    """Dense M x M nonnegative amplitude-gain matrix plus noise std."""

    h: np.ndarray
    sigma: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"channel matrix must be square, got {h.shape}")
        if np.any(h < 0):
            raise ValueError("channel matrix entries must be nonnegative")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "h", h)

    @property
    def n_pairs(self) -> int:
        return self.h.shape[0]


def _draw_rx(rng: np.random.Generator, tx: np.ndarray, half_width: float) -> np.ndarray:
    """Receivers uniform in a box around each transmitter, redrawing any that
    land within MIN_TX_RX_DISTANCE of their transmitter."""
    m = tx.shape[0]
    rx = tx + rng.uniform(-half_width, half_width, size=(m, 2))
    for _ in range(_REDRAW_RETRIES):
        bad = np.linalg.norm(rx - tx, axis=1) < MIN_TX_RX_DISTANCE
        if not bad.any():
            return rx
        rx[bad] = tx[bad] + rng.uniform(-half_width, half_width, size=(int(bad.sum()), 2))
    raise DegenerateGeometryError(np.flatnonzero(bad))


def gen_topology(m: int, seed: int) -> Topology:
    """Drop M transmitters uniformly in [-M, M]^2 with paired receivers."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = substream(seed, "topology")
    tx = rng.uniform(-m, m, size=(m, 2))
    rx = _draw_rx(rng, tx, m / 4.0)
    return Topology(tx=tx, rx=rx, extent=float(m))


def apply_density(top: Topology, d: float, seed: int) -> Topology:
    """Compress transmitter positions by 1/d and redraw receivers around the
    new locations. d > 1 packs the network tighter (more interference)."""
    if not d > 0:
        raise ValueError(f"density factor must be positive, got {d}")
    rng = substream(seed, "topology")
    tx = top.tx / d
    rx = _draw_rx(rng, tx, top.extent / 4.0)
    return Topology(tx=tx, rx=rx, extent=top.extent)


def resize(top: Topology, n: int, seed: int) -> Topology:
    """Shrink to the first n pairs, or grow by dropping fresh pairs inside the
    original [-extent, extent]^2 area (the area never rescales)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = top.n_pairs
    if n <= m:
        return Topology(tx=top.tx[:n].copy(), rx=top.rx[:n].copy(), extent=top.extent)
    rng = substream(seed, "topology")
    new_tx = rng.uniform(-top.extent, top.extent, size=(n - m, 2))
    new_rx = _draw_rx(rng, new_tx, top.extent / 4.0)
    return Topology(
        tx=np.vstack([top.tx, new_tx]),
        rx=np.vstack([top.rx, new_rx]),
        extent=top.extent,
    )


def path_gain_matrix(top: Topology) -> np.ndarray:
    """Entry (i, j) = ||t_i - r_j||^(-2.2). Transmitter-indexed rows."""
    diff = top.tx[:, None, :] - top.rx[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    degenerate = np.argwhere(dist < 1e-12)
    if degenerate.size:
        raise DegenerateGeometryError(map(tuple, degenerate))
    return dist ** (-PATHLOSS_EXPONENT)


def sample_channel(top: Topology, sigma: float, seed: int, *, unit_fading: bool = False) -> ChannelMatrix:
    """One fading realization. h[i, j] = pathgain(tx j -> rx i) * Rayleigh(1).

    `unit_fading=True` is a test hook that replaces every fading draw by 1,
    leaving the (receiver-row-oriented) path-gain matrix.
    """
    gains = path_gain_matrix(top).T  # rows now index receivers
    if unit_fading:
        fading = np.ones_like(gains)
    else:
        rng = substream(seed, "fading")
        fading = rng.rayleigh(scale=1.0, size=gains.shape)
    return ChannelMatrix(h=gains * fading, sigma=float(sigma))
