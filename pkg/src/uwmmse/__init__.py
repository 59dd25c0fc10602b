"""Sum-rate power allocation for interference networks: classical WMMSE,
a trainable GCN-parameterized unfolding of it, and the experiment tooling
around both."""

__version__ = "0.1.0"

from .channel import ChannelMatrix, Topology, apply_density, gen_topology, resize, sample_channel
from .rates import PowerAllocation, link_rates, sum_rate
from .wmmse import truncated_wmmse, wmmse
from .model import ModelParams, forward, inference_fn, init_model, load_params, save_params

__all__ = [
    "ChannelMatrix", "Topology", "apply_density", "gen_topology", "resize",
    "sample_channel", "PowerAllocation", "link_rates", "sum_rate",
    "truncated_wmmse", "wmmse", "ModelParams", "forward", "inference_fn", "init_model",
    "load_params", "save_params", "__version__",
]
