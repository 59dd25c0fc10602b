import numpy as np
import pytest

from uwmmse.channel import ChannelMatrix, gen_topology, sample_channel
from uwmmse.rates import sum_rate, wmmse_objective
from uwmmse.wmmse import (
    solve_power,
    truncated_wmmse,
    update_u,
    update_v,
    update_w_classical,
    wmmse,
)


def single(h=1.0, sigma=1.0):
    return ChannelMatrix(h=np.array([[h]]), sigma=sigma)


def random_channel(m, seed, sigma=2.6e-5):
    return sample_channel(gen_topology(m, seed), sigma, seed)


def test_update_u_single():
    assert update_u(single(), np.array([1.0]))[0] == pytest.approx(0.5)


def test_update_u_zero_v():
    np.testing.assert_array_equal(update_u(single(), np.array([0.0])), [0.0])


def test_update_u_all_ones():
    ch = ChannelMatrix(h=np.ones((2, 2)), sigma=1.0)
    np.testing.assert_allclose(update_u(ch, np.ones(2)), [1 / 3, 1 / 3], rtol=1e-12)


def test_update_w_zero_u():
    np.testing.assert_array_equal(update_w_classical(single(), np.zeros(1), np.ones(1)), [1.0])


def test_update_w_single():
    assert update_w_classical(single(), np.array([0.5]), np.array([1.0]))[0] == pytest.approx(2.0)


def test_update_w_all_ones():
    ch = ChannelMatrix(h=np.ones((2, 2)), sigma=1.0)
    w = update_w_classical(ch, np.full(2, 1 / 3), np.ones(2))
    np.testing.assert_allclose(w, [1.5, 1.5], rtol=1e-12)


def test_update_v_zero_u():
    np.testing.assert_array_equal(update_v(single(), np.zeros(1), np.ones(1), 1.0), [0.0])


def test_update_v_clamps_at_sqrt_pmax():
    v = update_v(single(), np.array([0.5]), np.array([2.0]), p_max=1.0)
    assert v[0] == pytest.approx(1.0)


def test_update_v_interior():
    v = update_v(single(), np.array([0.5]), np.array([2.0]), p_max=9.0)
    assert v[0] == pytest.approx(2.0, rel=1e-9)


def test_wmmse_single_link_hits_pmax():
    alloc, trace = wmmse(single(h=0.8), p_max=1.0)
    np.testing.assert_allclose(alloc.p, [1.0])


def test_wmmse_diagonal_decoupled():
    ch = ChannelMatrix(h=np.diag([0.5, 1.0, 2.0]), sigma=0.3)
    alloc, _ = wmmse(ch, p_max=2.0)
    np.testing.assert_allclose(alloc.p, [2.0, 2.0, 2.0], rtol=1e-9)


@pytest.mark.parametrize("m", [5, 10, 20])
def test_objective_monotone(m):
    for seed in range(5):
        ch = random_channel(m, seed)
        _, trace = wmmse(ch, p_max=1.0)
        objs = trace.objective_values
        assert np.all(np.diff(objs) <= 1e-9 * np.abs(objs[:-1]))


def test_weights_at_least_one_on_classical_iterates():
    for seed in range(5):
        ch = random_channel(8, seed)
        _, trace = wmmse(ch, p_max=1.0)
        assert np.all(trace.ws >= 1.0 - 1e-12)


def test_equivalence_anchor_sqrt_p_equals_v():
    ch = random_channel(6, seed=2)
    alloc, trace = wmmse(ch, p_max=1.0)
    v_final = trace.vs[-1]
    np.testing.assert_allclose(np.sqrt(alloc.p), v_final, atol=1e-15)
    assert sum_rate(ch, v_final ** 2) == pytest.approx(trace.sum_rates[-1], abs=1e-12)


def test_truncation_consistency_exact():
    for seed in range(5):
        ch = random_channel(7, seed)
        _, full_trace = wmmse(ch, p_max=1.0, max_iter=6, tol=0.0)
        _, trunc_trace = truncated_wmmse(ch, p_max=1.0, n_iter=6)
        np.testing.assert_array_equal(trunc_trace.vs, full_trace.vs)
        np.testing.assert_array_equal(trunc_trace.us, full_trace.us)
        np.testing.assert_array_equal(trunc_trace.ws, full_trace.ws)


def test_truncated_equals_full_loop_when_same_iterations():
    ch = random_channel(5, seed=3)
    alloc_t, _ = truncated_wmmse(ch, 1.0, 50)
    alloc_f, _ = wmmse(ch, 1.0, max_iter=50, tol=0.0)
    np.testing.assert_array_equal(alloc_t.p, alloc_f.p)


def test_truncated_k4_below_full_on_average():
    deltas = []
    for seed in range(20):
        ch = random_channel(10, seed)
        r4 = sum_rate(ch, solve_power(ch, 1.0, 4))
        r100 = sum_rate(ch, solve_power(ch, 1.0, 100))
        deltas.append(r100 - r4)
    assert np.mean(deltas) > 0


def test_truncated_k1_feasible_deterministic():
    ch = random_channel(6, seed=4)
    a1, _ = truncated_wmmse(ch, 1.0, 1)
    a2, _ = truncated_wmmse(ch, 1.0, 1)
    np.testing.assert_array_equal(a1.p, a2.p)
    assert np.all((a1.p >= 0) & (a1.p <= 1.0))


def test_permutation_equivariance():
    rng = np.random.default_rng(0)
    for seed in range(10):
        m = 8
        ch = random_channel(m, seed)
        pi = np.eye(m)[rng.permutation(m)]
        p_perm = solve_power(ChannelMatrix(pi @ ch.h @ pi.T, ch.sigma), 1.0, 60)
        p_base = solve_power(ch, 1.0, 60)
        assert np.max(np.abs(p_perm - pi @ p_base)) <= 1e-9


def test_rejects_bad_iteration_counts():
    ch = single()
    with pytest.raises(ValueError):
        wmmse(ch, 1.0, max_iter=0)
    with pytest.raises(ValueError):
        truncated_wmmse(ch, 1.0, 0)
