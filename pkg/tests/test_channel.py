import numpy as np
import pytest

from uwmmse.channel import (
    ChannelMatrix,
    Topology,
    apply_density,
    gen_topology,
    path_gain_matrix,
    resize,
    sample_channel,
)
from uwmmse.errors import DegenerateGeometryError


def test_gen_topology_single_pair_boxes():
    top = gen_topology(1, seed=3)
    assert top.n_pairs == 1
    assert np.all(np.abs(top.tx) <= 1.0)
    assert np.all(np.abs(top.rx - top.tx) <= 0.25)


def test_gen_topology_membership_m20():
    top = gen_topology(20, seed=5)
    assert top.n_pairs == 20
    assert np.all(np.abs(top.tx) <= 20.0)
    assert np.all(np.abs(top.rx - top.tx) <= 5.0)


def test_gen_topology_deterministic():
    a = gen_topology(12, seed=42)
    b = gen_topology(12, seed=42)
    np.testing.assert_array_equal(a.tx, b.tx)
    np.testing.assert_array_equal(a.rx, b.rx)


def test_gen_topology_rejects_zero():
    with pytest.raises(ValueError):
        gen_topology(0, seed=1)


def test_apply_density_identity_keeps_tx():
    top = gen_topology(8, seed=0)
    scaled = apply_density(top, 1.0, seed=0)
    np.testing.assert_array_equal(scaled.tx, top.tx)


def test_apply_density_divides_tx():
    top = Topology(tx=np.array([[4.0, -2.0]]), rx=np.array([[4.5, -2.5]]), extent=8.0)
    scaled = apply_density(top, 2.0, seed=1)
    np.testing.assert_allclose(scaled.tx, [[2.0, -1.0]])


def test_apply_density_shrinks_pairwise_distances():
    top = gen_topology(10, seed=2)
    scaled = apply_density(top, 5.0, seed=2)
    dist = lambda t: np.max(np.linalg.norm(t.tx[:, None] - t.tx[None, :], axis=2))
    np.testing.assert_allclose(dist(scaled), dist(top) / 5.0)


def test_apply_density_rejects_nonpositive():
    top = gen_topology(4, seed=0)
    with pytest.raises(ValueError):
        apply_density(top, 0.0, seed=0)


def test_resize_identity():
    top = gen_topology(6, seed=9)
    same = resize(top, 6, seed=1)
    np.testing.assert_array_equal(same.tx, top.tx)
    np.testing.assert_array_equal(same.rx, top.rx)


def test_resize_shrink_keeps_prefix():
    top = gen_topology(20, seed=9)
    small = resize(top, 15, seed=1)
    np.testing.assert_array_equal(small.tx, top.tx[:15])
    np.testing.assert_array_equal(small.rx, top.rx[:15])


def test_resize_grow_preserves_prefix_and_area():
    top = gen_topology(20, seed=9)
    big = resize(top, 30, seed=1)
    np.testing.assert_array_equal(big.tx[:20], top.tx)
    np.testing.assert_array_equal(big.rx[:20], top.rx)
    # new transmitters stay inside the orignal [-20, 20]^2 area
    assert np.all(np.abs(big.tx[20:]) <= 20.0)
    assert big.extent == top.extent


def test_resize_grow_then_shrink_roundtrip():
    top = gen_topology(10, seed=4)
    back = resize(resize(top, 25, seed=7), 10, seed=8)
    np.testing.assert_array_equal(back.tx, top.tx)
    np.testing.assert_array_equal(back.rx, top.rx)


def test_resize_rejects_zero():
    with pytest.raises(ValueError):
        resize(gen_topology(3, seed=0), 0, seed=0)


@pytest.mark.parametrize("dist,expected", [
    (1.0, 1.0),
    (2.0, 2.0 ** -2.2),
    (0.5, 0.5 ** -2.2),
])
def test_path_gain_values(dist, expected):
    top = Topology(tx=np.array([[0.0, 0.0]]), rx=np.array([[dist, 0.0]]), extent=1.0)
    np.testing.assert_allclose(path_gain_matrix(top)[0, 0], expected, rtol=1e-12)


def test_path_gain_degenerate_reports_pair():
    top = Topology(tx=np.array([[0.0, 0.0], [1.0, 1.0]]),
                   rx=np.array([[1.0, 1.0], [2.0, 2.0]]), extent=2.0)
    with pytest.raises(DegenerateGeometryError) as exc:
        path_gain_matrix(top)
    assert (1, 0) in exc.value.pairs


def test_sample_channel_unit_fading_is_oriented_path_gain():
    top = gen_topology(5, seed=11)
    ch = sample_channel(top, sigma=1.0, seed=11, unit_fading=True)
    np.testing.assert_array_equal(ch.h, path_gain_matrix(top).T)


def test_sample_channel_deterministic():
    top = gen_topology(7, seed=3)
    a = sample_channel(top, 2.6e-5, seed=21)
    b = sample_channel(top, 2.6e-5, seed=21)
    np.testing.assert_array_equal(a.h, b.h)


def test_sample_channel_positive_diagonal():
    for seed in range(20):
        top = gen_topology(6, seed=seed)
        ch = sample_channel(top, 1.0, seed=seed)
        assert np.all(np.diag(ch.h) > 0)


def test_rayleigh_second_moment():
    # fading entries divided by path gain recover the raw Rayleigh draws
    top = gen_topology(20, seed=13)
    gains = path_gain_matrix(top).T
    draws = []
    for seed in range(250):
        ch = sample_channel(top, 1.0, seed=seed)
        draws.append(ch.h / gains)
    f = np.concatenate([d.ravel() for d in draws])
    assert f.size >= 10 ** 5
    assert 1.96 <= np.mean(f ** 2) <= 2.04


def test_channel_matrix_validation():
    with pytest.raises(ValueError):
        ChannelMatrix(h=np.ones((2, 3)), sigma=1.0)
    with pytest.raises(ValueError):
        ChannelMatrix(h=-np.ones((2, 2)), sigma=1.0)
    with pytest.raises(ValueError):
        ChannelMatrix(h=np.ones((2, 2)), sigma=0.0)
