import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from emofuse import lbp_features as lbp
from emofuse.errors import BadSizeError, ImageTooSmallError, OutOfBoundsError
from emofuse.signal_io import GrayImage


def neighborhood(center, bits):
    """3x3 patch whose clockwise-from-top-left ring realises ``bits``."""
    ring_pos = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)]
    px = np.full((3, 3), center)
    for (r, c), b in zip(ring_pos, bits):
        px[r, c] = center + 20 if b == "1" else center - 20
    return GrayImage(px)


def test_bit_string_10011110_is_158():
    assert int("10011110", 2) == 158
    assert lbp.lbp_code(neighborhood(100, "10011110"), 1, 1) == 158


def test_tie_sets_bit():
    assert lbp.lbp_code(GrayImage(np.full((3, 3), 77)), 1, 1) == 255


def test_brighter_center_gives_zero():
    px = np.full((3, 3), 10)
    px[1, 1] = 200
    assert lbp.lbp_code(GrayImage(px), 1, 1) == 0


def test_msb_is_top_left():
    px = np.zeros((3, 3), dtype=int)
    px[1, 1] = 50
    px[0, 0] = 60
    assert lbp.lbp_code(GrayImage(px), 1, 1) == 0b10000000
    px[0, 0] = 0
    px[1, 0] = 60  # left neighbor is visited last
    assert lbp.lbp_code(GrayImage(px), 1, 1) == 0b00000001


def test_code_out_of_bounds():
    img = GrayImage(np.zeros((4, 4)))
    with pytest.raises(OutOfBoundsError):
        lbp.lbp_code(img, 0, 1)
    with pytest.raises(OutOfBoundsError):
        lbp.lbp_code(img, 1, 3)


def test_uniform_map():
    table = lbp.build_uniform_map()
    assert table.shape == (256,)
    assert table[0b00000000] != 58
    assert table[0b01010100] == 58
    uniform = [c for c in range(256) if oracles.is_uniform(c)]
    assert len(uniform) == 58
    assert [table[c] for c in uniform] == list(range(58))
    assert all(table[c] == 58 for c in range(256) if c not in uniform)
    assert np.array_equal(table, lbp.build_uniform_map())


def test_lbp_image_shapes():
    assert lbp.lbp_image(GrayImage(np.zeros((3, 3)))).shape == (1, 1)
    codes = lbp.lbp_image(GrayImage(np.full((10, 10), 9)))
    assert codes.shape == (8, 8) and np.all(codes == 255)
    with pytest.raises(ImageTooSmallError):
        lbp.lbp_image(GrayImage(np.zeros((2, 5))))


def test_lbp_image_matches_per_pixel(rng):
    for _ in range(20):
        px = rng.integers(0, 256, (6, 6))
        codes = lbp.lbp_image(GrayImage(px))
        want = [[oracles.lbp_code(px, x, y) for x in range(1, 5)] for y in range(1, 5)]
        assert codes.tolist() == want


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, (7, 9), elements=st.integers(0, 200)), st.integers(0, 55))
def test_lbp_shift_invariance(px, shift):
    a = lbp.lbp_image(GrayImage(px))
    b = lbp.lbp_image(GrayImage(px + shift))
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, (7, 9), elements=st.integers(0, 63)), st.integers(1, 4))
def test_lbp_scale_invariance(px, c):
    assert np.array_equal(lbp.lbp_image(GrayImage(px)), lbp.lbp_image(GrayImage(px * c)))


def test_face_vector_constant():
    v = lbp.facial_feature_vector(GrayImage(np.full((128, 112), 140)))
    assert v.shape == (3304,)
    assert v.sum() == 110 * 126 == 13860
    bin255 = lbp.build_uniform_map()[255]
    regions = v.reshape(56, 59)
    assert np.all(regions[:, bin255] == regions.sum(axis=1))


def test_face_vector_partitions_regions(rng):
    v = lbp.facial_feature_vector(GrayImage(rng.integers(0, 256, (128, 112))))
    regions = v.reshape(8, 7, 59).sum(axis=2)
    rows = np.diff((np.arange(9) * 126) // 8)
    cols = np.diff((np.arange(8) * 110) // 7)
    assert np.array_equal(regions, np.outer(rows, cols))
    assert v.sum() == 13860 and np.all(v >= 0)


def test_face_vector_region_order():
    # only the top-left region sees texture; everything else is flat
    px = np.full((128, 112), 100)
    px[2:12, 2:12] = np.indices((10, 10)).sum(axis=0) % 2 * 200
    regions = lbp.facial_feature_vector(GrayImage(px)).reshape(56, 59)
    bin255 = lbp.build_uniform_map()[255]
    assert regions[0, bin255] < regions[0].sum()
    assert np.all(regions[1:, bin255] == regions[1:].sum(axis=1))


def test_face_vector_bad_size():
    with pytest.raises(BadSizeError):
        lbp.facial_feature_vector(GrayImage(np.zeros((112, 128))))
