import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from facexpr.imgcore import BinaryMask, GrayImage
from facexpr.morphology import (SQUARE_3, StructuringElement, clear_border, complement,
                                dilate, disk_se, erode, reconstruct, reconstruct_gray,
                                regional_maxima)

masks = arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16)))


def random_mask(rng, w=16, h=16, p=None):
    return rng.random((h, w)) < (rng.uniform(0.2, 0.7) if p is None else p)


def random_se(rng):
    pts = {(0, 0)} | {tuple(int(v) for v in rng.integers(-2, 3, 2)) for _ in range(rng.integers(1, 6))}
    return StructuringElement(pts)


def points(mask):
    return oracles.to_points(np.asarray(mask).tolist())


@pytest.mark.parametrize("radius, count", [(0, 1), (1, 5), (2, 13), (3, 29), (3.4, 37)])
def test_disk_sizes(radius, count):
    se = disk_se(radius)
    assert len(se) == count
    brute = {(dx, dy) for dx in range(-4, 5) for dy in range(-4, 5) if dx * dx + dy * dy <= radius * radius}
    assert set(se.offsets) == brute


@given(st.floats(0, 6))
def test_disk_symmetric(radius):
    se = disk_se(radius)
    assert (0, 0) in se.offsets
    assert se.reflected() == se


def test_dilate_empty_and_point():
    empty = BinaryMask.empty(7, 7)
    assert dilate(empty, disk_se(2)).count() == 0
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    out = dilate(BinaryMask(m), disk_se(1))
    assert points(out.bits) == {(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)}


@pytest.mark.parametrize("seed", range(100))
def test_dilate_erode_match_oracle(seed):
    rng = np.random.default_rng(seed)
    m = random_mask(rng)
    se = random_se(rng)
    p = points(m)
    assert points(dilate(BinaryMask(m), se).bits) == oracles.dilate(p, se.offsets, 16, 16)
    assert points(erode(BinaryMask(m), se).bits) == oracles.erode(p, se.offsets, 16, 16)


def test_erode_full_mask_clears_border_band():
    full = BinaryMask(np.ones((9, 11), bool))
    out = erode(full, disk_se(2)).bits
    assert out[2:-2, 2:-2].all()
    assert not out[:2].any() and not out[-2:].any()
    assert not out[:, :2].any() and not out[:, -2:].any()


@pytest.mark.parametrize("seed", range(30))
def test_erode_duality(seed):
    rng = np.random.default_rng(1000 + seed)
    m = random_mask(rng, p=0.8)
    se = random_se(rng)
    assert points(erode(BinaryMask(m), se).bits) == oracles.erode_by_duality(points(m), se.offsets, 16, 16)


@given(masks)
def test_complement(m):
    mask = BinaryMask(m)
    assert complement(complement(mask)) == mask
    assert mask.count() + complement(mask).count() == m.size
    assert complement(BinaryMask.empty(3, 2)).count() == 6


@settings(max_examples=50)
@given(masks, st.floats(0, 2.5))
def test_extensive_and_anti_extensive(m, r):
    mask, se = BinaryMask(m), disk_se(r)
    assert np.all(dilate(mask, se).bits >= m)
    assert np.all(erode(mask, se).bits <= m)


def test_reconstruct_examples():
    m = np.zeros((8, 12), bool)
    m[1:4, 1:4] = True
    m[5:7, 7:11] = True
    mask = BinaryMask(m)
    assert reconstruct(mask, mask) == mask
    assert reconstruct(BinaryMask.empty(12, 8), mask).count() == 0
    marker = np.zeros_like(m)
    marker[6, 9] = True
    out = reconstruct(BinaryMask(marker), mask).bits
    assert out[5:7, 7:11].all() and out.sum() == 8


def test_reconstruct_uses_eight_connectivity():
    m = np.eye(5, dtype=bool)
    marker = np.zeros_like(m)
    marker[0, 0] = True
    assert reconstruct(BinaryMask(marker), BinaryMask(m)) == BinaryMask(m)


@pytest.mark.parametrize("seed", range(100))
def test_reconstruct_and_clear_border_match_oracle(seed):
    rng = np.random.default_rng(2000 + seed)
    m = random_mask(rng, p=rng.uniform(0.2, 0.5))
    marker = random_mask(rng, p=0.05)
    p = points(m)
    got = reconstruct(BinaryMask(marker), BinaryMask(m)).bits
    assert points(got) == oracles.reconstruct(points(marker) & p, p)
    assert points(clear_border(BinaryMask(m)).bits) == oracles.clear_border(p, 16, 16)


@settings(max_examples=50)
@given(masks, st.data())
def test_reconstruct_idempotent(m, data):
    marker = BinaryMask(data.draw(arrays(bool, m.shape)))
    mask = BinaryMask(m)
    once = reconstruct(marker, mask)
    assert reconstruct(once, mask) == once


def test_clear_border_examples():
    m = np.zeros((10, 10), bool)
    m[3:6, 3:6] = True
    assert clear_border(BinaryMask(m)) == BinaryMask(m)
    # a one-pixel stalk joins the blob to each edge in turn
    for stalk in [np.s_[0:3, 4], np.s_[6:10, 4], np.s_[4, 0:3], np.s_[4, 6:10]]:
        touched = m.copy()
        touched[stalk] = True
        assert clear_border(BinaryMask(touched)).count() == 0


def test_regional_maxima_examples():
    assert regional_maxima(GrayImage(np.full((5, 6), 42))).count() == 30
    px = np.full((7, 7), 10)
    px[3, 4] = 200
    got = regional_maxima(GrayImage(px)).bits
    assert got.sum() == 1 and got[3, 4]


def test_regional_maxima_extremes():
    px = np.zeros((4, 4), dtype=np.uint8)
    px[1, 1] = 255
    assert points(regional_maxima(GrayImage(px)).bits) == {(1, 1)}


@pytest.mark.parametrize("seed", range(50))
def test_regional_maxima_match_oracle(seed):
    rng = np.random.default_rng(3000 + seed)
    px = rng.integers(0, rng.choice([3, 8, 256]), (12, 12))
    got = points(regional_maxima(GrayImage(px)).bits)
    assert got == oracles.regional_maxima(px.tolist())


def test_reconstruct_gray_fixpoint():
    mask = np.array([[5, 5, 1, 7], [5, 2, 1, 7], [1, 1, 1, 9]])
    marker = np.zeros_like(mask)
    marker[0, 0] = 4
    out = reconstruct_gray(marker, mask)
    # the marker floods only through pixels at least as bright as itself
    assert out.tolist() == [[4, 4, 1, 1], [4, 2, 1, 1], [1, 1, 1, 1]]


def test_square_element():
    assert len(SQUARE_3) == 9
