import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.color import rgb2lab

from smikm.errors import ChannelError
from smikm.imagecore import ImageBuf
from smikm.saliency import (
    RegionMasks,
    SaliencyMap,
    compute_saliency_hc,
    otsu_threshold,
    saliency_to_image,
    segment,
)


def _two_colour(frac_white=0.1, shape=(20, 20)):
    arr = np.zeros(shape + (3,), np.uint8)
    n = int(round(frac_white * shape[0] * shape[1]))
    arr.reshape(-1, 3)[:n] = 255
    return arr


def test_uniform_image_has_zero_map():
    img = ImageBuf(np.full((16, 16, 3), (10, 200, 30), np.uint8))
    assert not compute_saliency_hc(img).values.any()


def test_two_colour_map_matches_direct_contrast():
    arr = _two_colour(0.1)
    smap = compute_saliency_hc(ImageBuf(arr)).values
    # direct evaluation: S(c) = sum_j f_j D(c_j, c) over the two colours
    d = np.linalg.norm(rgb2lab(np.array([[[0, 0, 0]]], np.uint8)) - rgb2lab(np.array([[[255, 255, 255]]], np.uint8)))
    s_black, s_white = 0.1 * d, 0.9 * d
    assert s_white > s_black
    white = arr[..., 0] == 255
    assert np.all(smap[white] == 1.0)
    assert np.all(smap[~white] == 0.0)  # min-max normalisation


@settings(max_examples=20, deadline=None)
@given(
    st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)),
    st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)),
    st.integers(1, 99),
)
def test_two_colour_range(c1, c2, count):
    arr = np.empty((10, 10, 3), np.uint8)
    arr.reshape(-1, 3)[:] = c1
    arr.reshape(-1, 3)[:count] = c2
    v = compute_saliency_hc(ImageBuf(arr)).values
    assert v.min() >= 0 and v.max() <= 1
    if v.any():
        assert v.max() == 1.0


def test_rejects_grayscale():
    with pytest.raises(ChannelError):
        compute_saliency_hc(ImageBuf(np.zeros((8, 8), np.uint8)))


def test_map_shape_and_range(rng):
    img = ImageBuf(rng.integers(0, 256, (37, 53, 3), dtype=np.uint8))
    v = compute_saliency_hc(img).values
    assert v.shape == (37, 53)
    assert v.min() >= 0 and v.max() == pytest.approx(1.0)


def test_flip_equivariance(rng):
    arr = rng.integers(0, 256, (24, 31, 3), dtype=np.uint8)
    base = compute_saliency_hc(ImageBuf(arr)).values
    assert np.allclose(compute_saliency_hc(ImageBuf(arr[:, ::-1])).values, base[:, ::-1], atol=1e-12)
    assert np.allclose(compute_saliency_hc(ImageBuf(arr[::-1])).values, base[::-1], atol=1e-12)


def test_pixel_permutation_equivariance(rng):
    arr = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    perm = rng.permutation(400)
    shuffled = arr.reshape(-1, 3)[perm].reshape(20, 20, 3)
    a = compute_saliency_hc(ImageBuf(arr)).values.ravel()
    b = compute_saliency_hc(ImageBuf(shuffled)).values.ravel()
    assert np.allclose(a[perm], b, atol=1e-12)


def test_salient_object_on_plain_background():
    arr = np.full((60, 80, 3), (40, 90, 40), np.uint8)
    arr[20:40, 30:50] = (230, 30, 30)
    v = compute_saliency_hc(ImageBuf(arr)).values
    assert v[30, 40] > v[5, 5]


# -- segmentation ------------------------------------------------------------


def test_bimodal_map_splits_modes():
    v = np.full((30, 30), 0.1)
    v[5:15, 10:25] = 0.9
    masks = segment(SaliencyMap(v))
    assert np.array_equal(masks.foreground, v == 0.9)


def test_otsu_threshold_between_modes():
    v = np.array([0.1] * 50 + [0.9] * 30)
    t = otsu_threshold(v)
    assert 0.1 < t <= 0.9


@pytest.mark.parametrize("level", [0.0, 0.4, 1.0])
def test_uniform_map_falls_back_to_top_quarter(level):
    masks = segment(SaliencyMap(np.full((20, 20), level)))
    assert masks.foreground.sum() == 100


def test_fallback_to_twice_mean(monkeypatch):
    import smikm.saliency as sal

    monkeypatch.setattr(sal, "otsu_threshold", lambda values: 0.0)  # everything foreground
    v = np.full((10, 10), 0.1)
    v[:2] = 0.6
    masks = sal.segment(SaliencyMap(v))
    # mean = 0.2, so the retry keeps pixels >= 0.4
    assert np.array_equal(masks.foreground, v >= 0.4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 30), st.integers(2, 30))
def test_masks_partition(seed, h, w):
    v = np.random.default_rng(seed).random((h, w)) ** 3
    masks = segment(SaliencyMap(v))
    assert np.array_equal(masks.background, ~masks.foreground)
    assert masks.foreground.any()
    assert masks.foreground.mean() <= 0.95 or masks.foreground.sum() == max(1, round(0.25 * h * w))


def test_saliency_to_image_rounding():
    img = saliency_to_image(SaliencyMap(np.array([[1.0, 0.0, 0.5]])))
    assert img.channels == 1
    assert img.data.tolist() == [[255, 0, 128]]
