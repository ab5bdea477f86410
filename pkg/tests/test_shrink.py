import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wcc.shrink import ShrinkSet, channel_norms, gather, keep_count, scatter, select_topk
from wcc.tensor_io import random_tensor


def projector_error(y, positions):
    """Residual of keeping ``positions`` (flat) in every channel, computed directly."""
    c, h, w = y.shape
    kept = np.zeros(h * w, dtype=bool)
    kept[list(positions)] = True
    flat = y.reshape(c, -1).astype(np.float64)
    return float(np.sqrt(np.sum(flat[:, ~kept] ** 2)))


def test_norm_examples():
    y = np.zeros((2, 1, 2))
    y[:, 0, 0] = (3, 4)
    assert channel_norms(y)[0, 0] == 5.0
    x = np.array([[[-2.0, 1.5]]])
    np.testing.assert_array_equal(channel_norms(x), [[2.0, 1.5]])
    np.testing.assert_array_equal(channel_norms(np.zeros((3, 2, 2))), 0.0)
    assert channel_norms(y, "l1")[0, 0] == 7.0
    assert channel_norms(y, "linf")[0, 0] == 4.0


def test_topk_examples():
    ch0 = [3, 0, 1, 2]
    ch1 = [4, 0, 0, 2]
    y = np.array([ch0, ch1], dtype=np.float64).reshape(2, 2, 2)
    norms = channel_norms(y)
    np.testing.assert_allclose(norms.ravel(), [5, 0, 1, math.sqrt(8)])
    s = select_topk(norms, 0.5)
    assert s.k == 2 and s.indices.tolist() == [0, 3]
    assert select_topk(norms, 1.0).indices.tolist() == [0, 1, 2, 3]
    assert select_topk(np.ones((2, 2)), 0.25).indices.tolist() == [0]


def test_tie_break_lowest_index():
    norms = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 0.0])
    assert select_topk(norms, 0.5).indices.tolist() == [1, 2, 4]
    assert select_topk(norms, 4 / 6).indices.tolist() == [0, 1, 2, 4]


def test_rate_validation():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            select_topk(np.ones(4), bad)


@given(st.floats(1e-3, 1.0), st.integers(1, 40), st.integers(1, 40))
def test_count(rate, h, w):
    s = select_topk(np.random.default_rng(h * w).random((h, w)), rate)
    assert s.k == keep_count(rate, h * w)
    assert s.k == max(1, math.ceil(round(rate * h * w, 9)))
    assert np.all(np.diff(s.indices) > 0)


def test_count_fifty_pairs():
    rng = np.random.default_rng(5)
    for _ in range(50):
        rate = float(rng.uniform(0.01, 1.0))
        h, w = (int(v) for v in rng.integers(1, 64, size=2))
        assert select_topk(rng.random((h, w)), rate).k == math.ceil(rate * h * w - 1e-9)


def test_retained_dominate_dropped():
    norms = np.random.default_rng(0).random((16, 16))
    s = select_topk(norms, 0.3)
    mask = s.mask().reshape(16, 16)
    assert norms[mask].min() >= norms[~mask].max()


@pytest.mark.parametrize("shape", [(1, 2, 4), (3, 2, 4), (2, 4, 2), (4, 1, 8), (2, 2, 3)])
def test_topk_is_optimal_joint_projector(shape):
    c, h, w = shape
    n = h * w
    for seed in range(5):
        y = random_tensor(c, h, w, seed)
        for k in range(1, n + 1):
            s = select_topk(channel_norms(y), k / n)
            assert s.k == k
            ours = float(np.linalg.norm((y - scatter(gather(y, s), s, h, w)).astype(np.float64)))
            best = min(projector_error(y, sub) for sub in itertools.combinations(range(n), k))
            assert ours == pytest.approx(projector_error(y, s.indices))
            assert ours <= best + 1e-6


def test_gather_scatter_identities():
    y = random_tensor(3, 4, 6, seed=1)
    s = select_topk(channel_norms(y), 0.4)
    v = random_tensor(1, 3, s.k, seed=2)[0]
    assert gather(scatter(v, s, 4, 6), s).tobytes() == v.tobytes()
    masked = np.where(s.mask().reshape(4, 6), y, 0)
    np.testing.assert_array_equal(scatter(gather(y, s), s, 4, 6), masked)
    proj = scatter(gather(y, s), s, 4, 6)
    np.testing.assert_array_equal(scatter(gather(proj, s), s, 4, 6), proj)


def test_full_rate_is_reshape():
    y = random_tensor(2, 3, 4, seed=3)
    s = select_topk(channel_norms(y), 1.0)
    g = gather(y, s)
    np.testing.assert_array_equal(g, y.reshape(2, 12))
    assert scatter(g, s, 3, 4).tobytes() == y.tobytes()


def test_gather_preserves_channel_and_index_order():
    y = np.arange(2 * 2 * 3, dtype=np.float32).reshape(2, 2, 3)
    s = ShrinkSet(np.array([1, 4, 5]), 6)
    np.testing.assert_array_equal(gather(y, s), [[1, 4, 5], [7, 10, 11]])


def test_bounds_errors():
    with pytest.raises(IndexError):
        ShrinkSet(np.array([0, 6]), 6)
    with pytest.raises(ValueError):
        ShrinkSet(np.array([2, 1]), 6)
    s = ShrinkSet(np.array([0, 1]), 6)
    with pytest.raises(IndexError):
        gather(np.zeros((1, 2, 2)), s)
    with pytest.raises(IndexError):
        scatter(np.zeros((1, 2)), s, 2, 2)


def test_blob_and_bitmap():
    s = ShrinkSet(np.array([0, 3, 9]), 10)
    blob = s.to_bytes()
    assert blob == bytes.fromhex("03000000" "00000000" "03000000" "09000000")
    assert ShrinkSet.from_bytes(blob, 10) == s
    assert s.bitmap() == bytes([0b00001001, 0b00000010])
    with pytest.raises(ValueError):
        ShrinkSet.from_bytes(blob[:-1], 10)


def test_deterministic():
    y = random_tensor(4, 16, 16, seed=8)
    a = select_topk(channel_norms(y), 0.25)
    b = select_topk(channel_norms(y.copy()), 0.25)
    assert a == b
