"""Seed management.

All randomness in the package flows through named substreams derived from a
single user seed via numpy's SeedSequence spawn keys. Streams are independent
of each other, so e.g. drawing more fading samples never perturbs topology
generation.

Streams:
    topology  - transmitter/receiver placement
    fading    - per-channel Rayleigh draws
    training  - parameter init, batch ordering
"""

import numpy as np

_STREAMS = {"topology": 0, "fading": 1, "training": 2}


def substream(seed: int, stream: str, *indices: int) -> np.random.Generator:
    """Generator for a named stream, optionally indexed (e.g. per-sample)."""
    if stream not in _STREAMS:
        raise ValueError(f"unknown stream {stream!r}; expected one of {sorted(_STREAMS)}")
    key = (_STREAMS[stream],) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
