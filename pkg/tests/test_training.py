import numpy as np
import pytest

from uwmmse import autodiff as ad
from uwmmse.channel import ChannelMatrix, gen_topology, sample_channel
from uwmmse.model import forward_power, init_model
from uwmmse.training import (
    Adam,
    ChannelSource,
    Sgd,
    TrainConfig,
    empirical_loss,
    evaluate,
    train,
    train_step,
)


def random_channel(m, seed, sigma=1e-2):
    return sample_channel(gen_topology(m, seed), sigma, seed)


# ---------------------------------------------------------------------------
# optimizers against hand-stepped updates on a two-parameter quadratic

def quadratic_grads(x, y):
    # f(x, y) = 2x^2 + 3y^2 -> grads (4x, 6y)
    return 4.0 * x, 6.0 * y


def test_sgd_exact_update():
    x = ad.Tensor(np.array(1.0), requires_grad=True)
    y = ad.Tensor(np.array(-2.0), requires_grad=True)
    opt = Sgd([x, y], lr=0.1)
    for _ in range(3):
        gx, gy = quadratic_grads(float(x.data), float(y.data))
        x.grad, y.grad = np.array(gx), np.array(gy)
        ex, ey = float(x.data) - 0.1 * gx, float(y.data) - 0.1 * gy
        opt.step()
        assert float(x.data) == pytest.approx(ex, abs=1e-12)
        assert float(y.data) == pytest.approx(ey, abs=1e-12)


def test_adam_exact_update():
    x = ad.Tensor(np.array(1.0), requires_grad=True)
    y = ad.Tensor(np.array(-2.0), requires_grad=True)
    opt = Adam([x, y], lr=0.05)
    m = np.zeros(2)
    v = np.zeros(2)
    vals = np.array([1.0, -2.0])
    for t in range(1, 6):
        g = np.array([4.0 * vals[0], 6.0 * vals[1]])
        x.grad, y.grad = np.array(g[0]), np.array(g[1])
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g ** 2
        m_hat = m / (1 - 0.9 ** t)
        v_hat = v / (1 - 0.999 ** t)
        vals = vals - 0.05 * m_hat / (np.sqrt(v_hat) + 1e-8)
        opt.step()
        assert float(x.data) == pytest.approx(vals[0], abs=1e-12)
        assert float(y.data) == pytest.approx(vals[1], abs=1e-12)


# ---------------------------------------------------------------------------
# loss

def test_loss_diagonal_channel_hand_value():
    h = np.diag([0.8, 1.3])
    ch = ChannelMatrix(h=h, sigma=0.5)
    params = init_model(4, 1.0, 0.5, 0)
    with_p_max = np.log2(1.0 + np.diag(h) ** 2 * 1.0 / 0.25)
    loss = empirical_loss([ch], params)
    assert float(loss.data) == pytest.approx(-with_p_max.sum(), rel=1e-9)


def test_loss_duplicated_batch_equals_single():
    ch = random_channel(5, 1)
    params = init_model(2, 1.0, ch.sigma, 1)
    single = float(empirical_loss([ch], params).data)
    double = float(empirical_loss([ch, ch], params).data)
    assert double == pytest.approx(single, rel=1e-12)


def test_loss_gradient_nonzero_at_identity_init():
    ch = random_channel(6, 3)
    params = init_model(2, 1.0, ch.sigma, 3)
    with ad.Tape() as tape:
        tape.backward(empirical_loss([ch], params))
    norm = sum(float(np.sum(t.grad ** 2)) for t in params.tensors() if t.grad is not None)
    assert norm > 0


def test_loss_rejects_empty_batch():
    params = init_model(2, 1.0, 0.1, 0)
    with pytest.raises(ValueError):
        empirical_loss([], params)


# ---------------------------------------------------------------------------
# train_step / train

def test_zero_learning_rate_keeps_params():
    ch = random_channel(4, 5)
    params = init_model(2, 1.0, ch.sigma, 5)
    before = [t.data.copy() for t in params.tensors()]
    train_step([ch], params, Sgd(params.tensors(), lr=0.0))
    for b, t in zip(before, params.tensors()):
        np.testing.assert_array_equal(b, t.data)


def test_sgd_step_is_definitional():
    ch = random_channel(4, 6)
    params = init_model(2, 1.0, ch.sigma, 6)
    ref = params.copy()
    with ad.Tape() as tape:
        tape.backward(empirical_loss([ch], ref))
    expected = [t.data - 0.01 * (t.grad if t.grad is not None else 0.0) for t in ref.tensors()]
    train_step([ch], params, Sgd(params.tensors(), lr=0.01))
    for e, t in zip(expected, params.tensors()):
        np.testing.assert_allclose(t.data, e, atol=1e-15)


def test_zero_steps_returns_identity_init():
    cfg = TrainConfig(m=4, sigma=1e-2, steps=0, batch_size=4, eval_samples=8, seed=7)
    params, log = train(cfg)
    ident = init_model(cfg.n_layers, cfg.p_max, cfg.sigma, cfg.seed)
    for a, b in zip(params.tensors(), ident.tensors()):
        np.testing.assert_array_equal(a.data, b.data)
    assert log.losses == []


def test_training_trajectory_reproducible():
    cfg = TrainConfig(m=4, sigma=1e-2, steps=3, batch_size=4, eval_samples=8,
                      eval_interval=1, seed=11)
    p1, log1 = train(cfg)
    p2, log2 = train(cfg)
    assert log1.losses == log2.losses
    for a, b in zip(p1.tensors(), p2.tensors()):
        np.testing.assert_array_equal(a.data, b.data)


def test_short_training_does_not_regress_heldout():
    cfg = TrainConfig(m=6, sigma=2.6e-5, steps=25, batch_size=16, eval_samples=64,
                      eval_interval=5, seed=2, learning_rate=3e-3)
    src = ChannelSource(cfg)
    held = src.heldout(cfg.eval_samples)
    ident_mean = evaluate(init_model(cfg.n_layers, cfg.p_max, cfg.sigma, cfg.seed), held)["mean"]
    best, log = train(cfg, source=src)
    # best-checkpoint selection can never fall below the identity-init score
    assert max(log.eval_mean_sum_rates) >= ident_mean - 1e-9
    assert evaluate(best, held)["mean"] >= ident_mean - 1e-9


def test_feasible_at_every_step():
    cfg = TrainConfig(m=5, sigma=2.6e-5, steps=10, batch_size=8, eval_samples=8,
                      eval_interval=5, seed=3, learning_rate=1e-2)
    src = ChannelSource(cfg)
    params = init_model(cfg.n_layers, cfg.p_max, cfg.sigma, cfg.seed)
    opt = Adam(params.tensors(), cfg.learning_rate)
    probe = src.heldout(4)
    for _ in range(cfg.steps):
        train_step(src.train_batch(), params, opt)
        for ch in probe:
            p = forward_power(ch, params)
            assert np.all(p >= 0.0) and np.all(p <= cfg.p_max)


# ---------------------------------------------------------------------------
# regimes / evaluation

def test_density_regime_draws_within_range():
    cfg = TrainConfig(m=5, regime="density_robust", d_range=(0.5, 5.0),
                      batch_size=8, seed=4)
    src = ChannelSource(cfg)
    batch = src.train_batch()
    assert len(batch) == 8
    assert all(ch.n_pairs == 5 for ch in batch)


def test_size_regime_varies_m():
    cfg = TrainConfig(m=10, regime="size_robust", m_range=(4, 12), batch_size=16, seed=5)
    src = ChannelSource(cfg)
    sizes = {ch.n_pairs for ch in src.train_batch()}
    assert len(sizes) > 1
    assert all(4 <= s <= 12 for s in sizes)


def test_heldout_disjoint_from_training():
    cfg = TrainConfig(m=5, batch_size=4, seed=6)
    src = ChannelSource(cfg)
    train_h = [ch.h for ch in src.train_batch()]
    held_h = [ch.h for ch in src.heldout(4)]
    for a in train_h:
        for b in held_h:
            assert not np.array_equal(a, b)


def test_evaluate_identical_dataset_zero_std():
    ch = random_channel(4, 8)
    params = init_model(2, 1.0, ch.sigma, 8)
    stats = evaluate(params, [ch] * 5)
    assert stats["std"] == pytest.approx(0.0, abs=1e-12)
    assert stats["q1"] == stats["q3"] == stats["median"]
    assert stats["mean"] == pytest.approx(stats["median"], abs=1e-12)


def test_evaluate_identity_matches_truncated_solver():
    from uwmmse.rates import sum_rate
    from uwmmse.wmmse import solve_power

    params = init_model(4, 1.0, 2.6e-5, 9)
    dataset = [random_channel(6, s, sigma=2.6e-5) for s in range(12)]
    stats = evaluate(params, dataset)
    trunc = np.mean([sum_rate(ch, solve_power(ch, 1.0, 4)) for ch in dataset])
    assert stats["mean"] == pytest.approx(trunc, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(regime="nope")
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
