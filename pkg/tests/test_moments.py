import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smikm.errors import DegenerateImage, ParameterError
from smikm.imagecore import ImageBuf
from smikm.moments import (
    MULTI_ORDER,
    ORDER_SET,
    geometric_moments,
    ikm_descriptor,
    invariant_context,
    krawtchouk_basis,
    krawtchouk_coefficients,
    krawtchouk_moments_direct,
    krawtchouk_rho,
    krawtchouk_values,
    krawtchouk_weight,
    weighted_image,
    weighted_krawtchouk_moments,
)


def poch(a, k):
    out = Fraction(1)
    for i in range(k):
        out *= a + i
    return out


def kraw_exact(n, x, p: Fraction, N):
    """Terminating 2F1(-n, -x; -N; 1/p) in exact rationals."""
    return sum(
        poch(-n, k) * poch(-x, k) / (poch(-N, k) * math.factorial(k)) * (1 / p) ** k
        for k in range(n + 1)
    )


# -- geometric moments -------------------------------------------------------


def brute_moment(f, p, q):
    return sum(x**p * y**q * f[y][x] for y in range(len(f)) for x in range(len(f[0])))


def test_geometric_moments_small_table():
    f = [[1, 2], [3, 4]]
    m = geometric_moments(np.array(f, float), 3)
    assert m[0, 0] == 10
    for p in range(4):
        for q in range(4 - p):
            assert m[p, q] == brute_moment(f, p, q)


def test_geometric_moments_zero_image():
    assert not geometric_moments(np.zeros((5, 4)), 3).m.any()


def test_geometric_moments_origin_pixel():
    f = np.zeros((6, 6))
    f[0, 0] = 255
    m = geometric_moments(ImageBuf(f.astype(np.uint8)), 2)
    assert (m[0, 0], m[1, 0], m[0, 1]) == (255, 0, 0)


def test_geometric_moments_x_is_column():
    f = np.zeros((4, 6))
    f[1, 5] = 1.0  # row 1, column 5
    m = geometric_moments(f, 1)
    assert (m[1, 0], m[0, 1]) == (5, 1)


# -- invariant geometric moments --------------------------------------------


def test_centred_square_context():
    f = np.zeros((21, 21))
    f[6:15, 6:15] = 1
    ctx = invariant_context(f)
    assert (ctx.x_c, ctx.y_c) == pytest.approx((10, 10))
    assert ctx.theta == pytest.approx(0.0, abs=1e-12)
    assert ctx.mu11 == pytest.approx(0.0, abs=1e-9)


def test_v00_is_one(rng):
    for _ in range(5):
        ctx = invariant_context(rng.random((17, 23)))
        assert ctx.v[0, 0] == pytest.approx(1.0, rel=1e-12)
        assert abs(ctx.v[1, 0]) < 1e-12 and abs(ctx.v[0, 1]) < 1e-12 and abs(ctx.v[1, 1]) < 1e-12


def test_invariant_moments_translation(rng):
    shape = (rng.random((12, 9)) > 0.4).astype(float)
    a = np.zeros((40, 40))
    b = np.zeros((40, 40))
    a[4:16, 7:16] = shape
    b[9:21, 10:19] = shape  # shifted by (5, 3) along (x... ) rows/cols
    va, vb = invariant_context(a).v, invariant_context(b).v
    assert np.allclose(va, vb, rtol=1e-6, atol=1e-12)


def test_invariant_context_zero_mass():
    with pytest.raises(DegenerateImage):
        invariant_context(np.zeros((8, 8)))


def test_theta_follows_principal_axis():
    # a bar along the main diagonal has its principal axis at 45 degrees
    f = np.eye(25)
    ctx = invariant_context(f)
    assert abs(abs(ctx.theta) - np.pi / 4) < 1e-9 or abs(abs(ctx.theta) - 3 * np.pi / 4) < 1e-9
    assert ctx.v[0, 2] == pytest.approx(0.0, abs=1e-12)


# -- Krawtchouk polynomials --------------------------------------------------


def test_k0_is_one():
    assert np.all(krawtchouk_values(10, 0.3, 3)[0] == 1.0)


def test_k1_at_zero_is_one():
    assert krawtchouk_values(10, 0.3, 3)[1, 0] == 1.0


def test_k1_closed_form_zero():
    assert krawtchouk_values(4, 0.5, 1)[1, 2] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("p", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1, 3)])
@pytest.mark.parametrize("N", [3, 7, 29])
def test_recurrence_matches_hypergeometric(p, N):
    K = krawtchouk_values(N, float(p), 3)
    for n in range(4):
        exact = [float(kraw_exact(n, x, p, N)) for x in range(N + 1)]
        assert np.allclose(K[n], exact, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("N, p", [(9, 0.25), (29, 0.5), (40, 0.75)])
def test_low_orders_match_printed_closed_forms(N, p):
    x = np.arange(N + 1)
    K = krawtchouk_values(N, p, 2)
    assert np.allclose(K[1], 1 - x / (N * p))
    c = 1 / (N * (N - 1) * p**2)
    assert np.allclose(K[2], 1 - (2 / (N * p) + c) * x + c * x**2)


@pytest.mark.parametrize("N, p", [(5, 0.25), (29, 0.5), (63, 0.75)])
def test_coefficient_table_reproduces_values(N, p):
    a = krawtchouk_coefficients(N, p, 3)
    x = np.arange(N + 1, dtype=float)
    K = krawtchouk_values(N, p, 3)
    for n in range(4):
        assert np.allclose(np.polynomial.polynomial.polyval(x, a[:, n]), K[n], rtol=1e-9, atol=1e-9)


def test_weight_and_norm_at_zero():
    assert krawtchouk_weight(0, 0.3, 12) == pytest.approx(0.7**12)
    assert krawtchouk_rho(0, 0.3, 12) == 1.0


def test_norm_matches_weighted_sum():
    # rho(n) = sum_x w(x) K_n(x)^2, checked in exact arithmetic
    N, p = 8, Fraction(1, 3)
    for n in range(4):
        s = sum(
            math.comb(N, x) * p**x * (1 - p) ** (N - x) * kraw_exact(n, x, p, N) ** 2
            for x in range(N + 1)
        )
        assert krawtchouk_rho(n, float(p), N) == pytest.approx(float(s), rel=1e-12)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75, 0.1])
@pytest.mark.parametrize("N", [1, 5, 29, 64])
def test_weight_sums_to_one(p, N):
    assert krawtchouk_weight(np.arange(N + 1), p, N).sum() == pytest.approx(1.0, abs=1e-12)


def test_bad_p():
    for p in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ParameterError):
            krawtchouk_basis(10, p, 2)
        with pytest.raises(ParameterError):
            weighted_image(np.ones((4, 4)), p, 0.5)


def test_basis_is_shared_and_read_only():
    b = krawtchouk_basis(29, 0.5, 3)
    assert krawtchouk_basis(29, 0.5, 3) is b
    with pytest.raises(ValueError):
        b.kbar[0, 0] = 1.0


# -- weighted image and moments ---------------------------------------------


def test_weighted_constant_image_peaks_at_centre():
    wimg = weighted_image(np.ones((31, 31)), 0.5, 0.5)
    assert np.unravel_index(np.argmax(wimg), wimg.shape) == (15, 15)


def test_weighted_zero_image():
    assert not weighted_image(np.zeros((9, 9)), 0.3, 0.6).any()


def test_weight_focus_moves_to_low_corner():
    centre = np.unravel_index(np.argmax(weighted_image(np.ones((41, 41)), 0.5, 0.5)), (41, 41))
    low = np.unravel_index(np.argmax(weighted_image(np.ones((41, 41)), 0.25, 0.25)), (41, 41))
    assert low[0] < centre[0] and low[1] < centre[1]
    assert low == (10, 10)  # binomial mode floor((N + 1) p) with N = 40


def test_weighted_image_2d_weight_formula():
    f = np.full((5, 7), 2.0)
    wimg = weighted_image(f, 0.3, 0.6)
    wx = [math.comb(6, x) * 0.3**x * 0.7 ** (6 - x) for x in range(7)]
    wy = [math.comb(4, y) * 0.6**y * 0.4 ** (4 - y) for y in range(5)]
    assert wimg[3, 2] == pytest.approx(2.0 * math.sqrt(wx[2] * wy[3]))


@settings(max_examples=25, deadline=None)
@given(
    st.integers(3, 20),
    st.integers(3, 20),
    st.sampled_from([0.25, 0.5, 0.75, 0.4]),
    st.sampled_from([0.25, 0.5, 0.75, 0.6]),
    st.integers(0, 2**31 - 1),
)
def test_expansion_equals_direct_projection(h, w, px, py, seed):
    f = np.random.default_rng(seed).random((h, w)) * 255
    orders = [(n, m) for n in range(3) for m in range(3) if n + m <= 3 and n <= w - 1 and m <= h - 1]
    a = weighted_krawtchouk_moments(f, px, py, orders)
    b = krawtchouk_moments_direct(f, px, py, orders)
    assert np.allclose(a, b, rtol=1e-6, atol=1e-9 * np.abs(b).max())


def test_weighted_moments_zero_image():
    assert not weighted_krawtchouk_moments(np.zeros((10, 10)), 0.5, 0.5).any()


def test_row_image_has_no_y_orders(rng):
    # a 1 x N image is constant along its degenerate y axis
    f = rng.random((1, 24)) * 255
    orders = [(0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (0, 3)]
    assert not weighted_krawtchouk_moments(f, 0.5, 0.5, orders).any()
    assert not krawtchouk_moments_direct(f, 0.5, 0.5, orders).any()
    q00 = weighted_krawtchouk_moments(f, 0.5, 0.5, [(0, 0), (2, 0)])
    assert np.allclose(q00, krawtchouk_moments_direct(f, 0.5, 0.5, [(0, 0), (2, 0)]))


def test_profile_along_kbar0_kills_y_orders(rng):
    # f(x, y) = g(x) * Kbar_0(y): orthogonality removes every m > 0
    g = rng.random(15)
    k0 = krawtchouk_basis(9, 0.5, 3).kbar[0]
    f = np.outer(k0, g)
    q = krawtchouk_moments_direct(f, 0.5, 0.5, [(0, 1), (1, 2), (2, 1), (0, 3)])
    assert np.abs(q).max() < 1e-12
    assert np.allclose(weighted_krawtchouk_moments(f, 0.5, 0.5, [(0, 1), (1, 2)]), 0, atol=1e-10)


# -- IKM descriptor ----------------------------------------------------------


def _blob_patch(rng, side=30):
    f = np.zeros((side, side), np.uint8)
    f[6:22, 9:18] = 200
    f[14:20, 16:26] = 90
    return f


def test_ikm_lengths(rng):
    patch = ImageBuf(_blob_patch(rng))
    assert len(ikm_descriptor(patch)) == 6
    multi = ikm_descriptor(patch, MULTI_ORDER)
    assert len(multi) == 30 and multi.order_pairs == MULTI_ORDER
    assert np.isfinite(multi.values).all()


def test_ikm_multi_contains_single_in_centre_slot(rng):
    patch = ImageBuf(_blob_patch(rng))
    multi = ikm_descriptor(patch, MULTI_ORDER).values
    assert np.allclose(multi[12:18], ikm_descriptor(patch).values)


def test_ikm_rotation_90(rng):
    f = _blob_patch(rng)
    a = ikm_descriptor(ImageBuf(f)).values
    b = ikm_descriptor(ImageBuf(np.rot90(f))).values
    assert np.all(np.abs(a - b) <= 0.05 * np.abs(a))


def test_ikm_order_set():
    assert ORDER_SET == ((0, 2), (2, 0), (1, 2), (2, 1), (3, 0), (0, 3))


def test_ikm_black_patch_is_degenerate():
    with pytest.raises(DegenerateImage):
        ikm_descriptor(ImageBuf(np.zeros((30, 30), np.uint8)))
