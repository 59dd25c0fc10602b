"""Unsupervised training of the unfolded solver.

The loss is the negative mean sum-rate of the model's allocations over a batch
of channel realizations; no solved instances are involved. Channel batches are
drawn fresh every step from one of three regimes: a fixed topology with fresh
fading, topologies with randomized density, or topologies with randomized
size. Held-out evaluation uses a disjoint seed stream and the best-scoring
checkpoint is returned.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .channel import ChannelMatrix, Topology, apply_density, gen_topology, resize, sample_channel
from .model import ModelParams, forward_tensor, inference_fn, init_model
from .rates import sum_rate

REGIMES = ("fixed_topology", "density_robust", "size_robust")


@dataclass
class TrainConfig:
    m: int = 10
    sigma: float = 2.6e-5
    p_max: float = 1.0
    n_layers: int = 4
    batch_size: int = 64
    learning_rate: float = 1e-3
    steps: int = 1000
    optimizer: str = "adam"  # "adam" | "sgd"
    seed: int = 0
    regime: str = "fixed_topology"
    d_range: tuple[float, float] = (0.5, 5.0)
    m_range: tuple[int, int] = (10, 30)
    eval_samples: int = 512
    eval_interval: int = 100
    grad_clip: float | None = None  # global-norm clip, off by default

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)
    eval_steps: list[int] = field(default_factory=list)
    eval_mean_sum_rates: list[float] = field(default_factory=list)
    step_seconds: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# optimizers

class Sgd:
    def __init__(self, tensors: list[ad.Tensor], lr: float):
        self.tensors = tensors
        self.lr = lr

    def step(self):
        for t in self.tensors:
            if t.grad is not None:
                t.data -= self.lr * t.grad


class Adam:
    def __init__(self, tensors: list[ad.Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.tensors = tensors
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(t.data) for t in tensors]
        self.v = [np.zeros_like(t.data) for t in tensors]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, t in enumerate(self.tensors):
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g ** 2
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            t.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, tensors: list[ad.Tensor], lr: float):
    return Adam(tensors, lr) if name == "adam" else Sgd(tensors, lr)


# ---------------------------------------------------------------------------
# loss

def sum_rate_tensor(ch: ChannelMatrix, p: ad.Tensor) -> ad.Tensor:
    g = ch.h ** 2
    gd = np.diag(g)
    direct = ad.Tensor(gd) * p
    interference = ad.Tensor(g) @ p - direct
    return ad.tsum(ad.log2(direct / (interference + ch.sigma ** 2) + 1.0))


def empirical_loss(batch: list[ChannelMatrix], params: ModelParams) -> ad.Tensor:
    """Negative mean sum-rate of the model's allocations over the batch."""
    if not batch:
        raise ValueError("batch must be non-empty")
    total = None
    for ch in batch:
        rate = sum_rate_tensor(ch, forward_tensor(ch, params))
        total = rate if total is None else total + rate
    return -(total / float(len(batch)))


def train_step(batch: list[ChannelMatrix], params: ModelParams, optimizer,
               grad_clip: float | None = None) -> float:
    """One optimizer update from the batch gradient. Returns the loss."""
    tensors = params.tensors()
    for t in tensors:
        t.zero_grad()
    with ad.Tape() as tape:
        loss = empirical_loss(batch, params)
        tape.backward(loss)
    value = float(loss.data)
    if not np.isfinite(value) or any(
        t.grad is not None and not np.all(np.isfinite(t.grad)) for t in tensors
    ):
        raise FloatingPointError(f"non-finite loss/gradient (loss={value})")
    if grad_clip is not None:
        norm = np.sqrt(sum(float(np.sum(t.grad ** 2)) for t in tensors if t.grad is not None))
        if norm > grad_clip:
            scale = grad_clip / norm
            for t in tensors:
                if t.grad is not None:
                    t.grad = t.grad * scale
    optimizer.step()
    return value


# ---------------------------------------------------------------------------
# channel sources

class ChannelSource:
    """Deterministic per-regime batch generator. Training batches and the
    held-out set use disjoint sample-seed streams."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.base = gen_topology(config.m, config.seed)
        self._train_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(2, 0)))
        self._heldout_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(2, 1)))

    def _sample(self, rng) -> ChannelMatrix:
        cfg = self.config
        seed = int(rng.integers(2 ** 31))
        if cfg.regime == "fixed_topology":
            top = self.base
        elif cfg.regime == "density_robust":
            d = float(rng.uniform(*cfg.d_range))
            top = apply_density(self.base, d, seed)
        else:  # size_robust
            n = int(rng.integers(cfg.m_range[0], cfg.m_range[1] + 1))
            top = resize(self.base, n, seed)
        return sample_channel(top, cfg.sigma, seed)

    def train_batch(self) -> list[ChannelMatrix]:
        return [self._sample(self._train_rng) for _ in range(self.config.batch_size)]

    def heldout(self, n: int) -> list[ChannelMatrix]:
        return [self._sample(self._heldout_rng) for _ in range(n)]


# ---------------------------------------------------------------------------
# training loop and evaluation

def evaluate(params: ModelParams, dataset: list[ChannelMatrix]) -> dict:
    """Sum-rate statistics plus mean per-sample inference time."""
    if not dataset:
        raise ValueError("dataset must be non-empty")
    solve = inference_fn(params)
    rates = np.empty(len(dataset))
    start = time.perf_counter()
    for i, ch in enumerate(dataset):
        rates[i] = sum_rate(ch, solve(ch))
    elapsed = time.perf_counter() - start
    q1, med, q3 = np.percentile(rates, [25, 50, 75])
    return {
        "mean": float(rates.mean()),
        "std": float(rates.std()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "mean_inference_seconds": elapsed / len(dataset),
        "per_sample": rates,
    }


def train(config: TrainConfig, source: ChannelSource | None = None,
          params: ModelParams | None = None,
          progress=None) -> tuple[ModelParams, TrainLog]:
    """Train from an identity-initialized model (unless one is passed in) and
    return the checkpoint with the best held-out mean sum-rate."""
    if source is None:
        source = ChannelSource(config)
    if params is None:
        params = init_model(config.n_layers, config.p_max, config.sigma, config.seed)
    heldout = source.heldout(config.eval_samples)
    optimizer = make_optimizer(config.optimizer, params.tensors(), config.learning_rate)
    log = TrainLog()

    best_params = params.copy()
    best_score = evaluate(params, heldout)["mean"]
    log.eval_steps.append(0)
    log.eval_mean_sum_rates.append(best_score)

    for step in range(1, config.steps + 1):
        t0 = time.perf_counter()
        batch = source.train_batch()
        loss = train_step(batch, params, optimizer, config.grad_clip)
        log.losses.append(loss)
        log.step_seconds.append(time.perf_counter() - t0)
        if step % config.eval_interval == 0 or step == config.steps:
            score = evaluate(params, heldout)["mean"]
            log.eval_steps.append(step)
            log.eval_mean_sum_rates.append(score)
            if score > best_score:
                best_score = score
                best_params = params.copy()
            if progress is not None:
                progress(step, loss, score)
    return best_params, log
