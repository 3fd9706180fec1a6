"""Geometric, invariant geometric and Krawtchouk moments of image patches.

Every routine here works on float64 planes indexed ``plane[y, x]`` with
``x`` the column.  Batch variants take stacks shaped ``(n, height, width)``
so a whole image's patches are described in one vectorised pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import poch
from scipy.stats import binom

from .errors import DegenerateImage, ParameterError
from .imagecore import ImageBuf

#: Moment orders making up one single-order descriptor, in output order.
ORDER_SET: tuple[tuple[int, int], ...] = ((0, 2), (2, 0), (1, 2), (2, 1), (3, 0), (0, 3))

SINGLE_ORDER: tuple[tuple[float, float], ...] = ((0.5, 0.5),)
#: Focus zones: upper-left, upper-right, centre, lower-left, lower-right.
MULTI_ORDER: tuple[tuple[float, float], ...] = (
    (0.25, 0.25),
    (0.25, 0.75),
    (0.5, 0.5),
    (0.75, 0.25),
    (0.75, 0.75),
)

# normalised odd-order magnitude below which a moment cannot fix the sign
_SIGN_EPS = 1e-9


def _as_plane(img) -> np.ndarray:
    if isinstance(img, ImageBuf):
        if img.channels != 1:
            raise ParameterError("moments need a single-channel image")
        return img.data.astype(np.float64)
    plane = np.asarray(img, dtype=np.float64)
    if plane.ndim != 2:
        raise ParameterError(f"expected a 2-D plane, got shape {plane.shape}")
    return plane


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ParameterError(f"Krawtchouk parameter p must lie in (0, 1), got {p}")


# --------------------------------------------------------------------------
# geometric moments
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeometricMoments:
    """``m[p, q] = sum_x sum_y x**p * y**q * f(x, y)`` for ``p, q <= max_order``."""

    m: np.ndarray

    @property
    def max_order(self) -> int:
        return self.m.shape[0] - 1

    def __getitem__(self, pq):
        return self.m[pq]


def _power_table(n: int, max_order: int) -> np.ndarray:
    return np.arange(n, dtype=np.float64)[None, :] ** np.arange(max_order + 1)[:, None]


def geometric_moments(img, max_order: int = 3) -> GeometricMoments:
    f = _as_plane(img)
    xp = _power_table(f.shape[1], max_order)
    yq = _power_table(f.shape[0], max_order)
    return GeometricMoments(xp @ f.T @ yq.T)


# --------------------------------------------------------------------------
# invariant geometric moments
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InvariantMomentContext:
    """Centroid, orientation and normalised moments ``v[n, m]`` of one image.

    ``theta`` is the angle of the normalised frame: the principal axis,
    turned by pi when needed so the leading non-vanishing odd-order
    moment is positive.
    """

    x_c: float
    y_c: float
    theta: float
    mu11: float
    mu20: float
    mu02: float
    v: np.ndarray


def _invariant_batch(stack: np.ndarray, max_order: int = 3):
    """Invariant moments of every plane in ``stack``.

    Returns ``(v, mass, xc, yc, theta, mu11, mu20, mu02)``; ``v`` has shape
    ``(n, max_order + 1, max_order + 1)`` with entries where
    ``i + j > max_order`` left at zero.  Planes with zero mass yield NaN.
    """
    f = np.asarray(stack, dtype=np.float64)
    _, h, w = f.shape
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    mass = f.sum(axis=(1, 2))
    ok = mass > 0
    safe = np.where(ok, mass, 1.0)
    col = f.sum(axis=1)  # (n, w)
    row = f.sum(axis=2)  # (n, h)
    xc = col @ xs / safe
    yc = row @ ys / safe
    dx = xs[None, :] - xc[:, None]
    dy = ys[None, :] - yc[:, None]
    mu20 = np.einsum("nx,nx->n", col, dx * dx)
    mu02 = np.einsum("ny,ny->n", row, dy * dy)
    mu11 = np.einsum("nyx,ny,nx->n", f, dy, dx)
    theta = 0.5 * np.arctan2(2.0 * mu11, mu20 - mu02)

    c = np.cos(theta)[:, None, None]
    s = np.sin(theta)[:, None, None]
    u = dx[:, None, :] * c + dy[:, :, None] * s
    t = -dx[:, None, :] * s + dy[:, :, None] * c

    v = np.zeros((f.shape[0], max_order + 1, max_order + 1))
    upow = [np.ones_like(u)]
    tpow = [np.ones_like(t)]
    for _ in range(max_order):
        upow.append(upow[-1] * u)
        tpow.append(tpow[-1] * t)
    for i in range(max_order + 1):
        fu = f * upow[i]
        for j in range(max_order + 1 - i):
            scale = safe ** (-(i + j) / 2.0 - 1.0)
            v[:, i, j] = (fu * tpow[j]).sum(axis=(1, 2)) * scale

    # principal-axis alignment leaves a pi ambiguity that negates odd orders
    if max_order >= 3:
        probe = np.stack([v[:, 3, 0], v[:, 0, 3], v[:, 2, 1], v[:, 1, 2]], axis=1)
        significant = np.abs(probe) > _SIGN_EPS
        first = np.argmax(significant, axis=1)
        lead = probe[np.arange(len(probe)), first]
        flip = significant.any(axis=1) & (lead < 0)
        if flip.any():
            parity = (-1.0) ** np.add.outer(np.arange(max_order + 1), np.arange(max_order + 1))
            v[flip] *= parity
            theta = np.where(flip, theta + np.pi, theta)
            theta = np.where(theta > np.pi, theta - 2 * np.pi, theta)

    v[~ok] = np.nan
    return v, mass, xc, yc, theta, mu11, mu20, mu02


def invariant_context(img, max_order: int = 3) -> InvariantMomentContext:
    """Translation, scale and rotation normalised geometric moments.

    ``v[n, m] = m00 ** (-(n + m) / 2 - 1) * sum f * u**n * t**m`` where
    ``(u, t)`` are centroid-relative coordinates rotated into the principal
    frame.  ``v[0, 0]`` is 1 and ``v[1, 0] = v[0, 1] = v[1, 1] = 0`` up to
    rounding.
    """
    f = _as_plane(img)
    v, mass, xc, yc, theta, mu11, mu20, mu02 = _invariant_batch(f[None], max_order)
    if not mass[0] > 0:
        raise DegenerateImage("image has zero total intensity")
    return InvariantMomentContext(
        x_c=float(xc[0]),
        y_c=float(yc[0]),
        theta=float(theta[0]),
        mu11=float(mu11[0]),
        mu20=float(mu20[0]),
        mu02=float(mu02[0]),
        v=v[0],
    )


# --------------------------------------------------------------------------
# Krawtchouk polynomials
# --------------------------------------------------------------------------


def krawtchouk_weight(x, p: float, N: int) -> np.ndarray:
    """Binomial weight ``C(N, x) p**x (1 - p)**(N - x)``."""
    _check_p(p)
    return binom.pmf(np.asarray(x), N, p)


def krawtchouk_rho(n: int, p: float, N: int) -> float:
    """Squared norm ``(-1)**n ((1-p)/p)**n n! / (-N)_n`` of ``K_n``."""
    _check_p(p)
    return float((-1) ** n * ((1 - p) / p) ** n * math.factorial(n) / poch(-N, n))


def krawtchouk_coefficients(N: int, p: float, max_order: int) -> np.ndarray:
    """Monomial coefficients from the terminating hypergeometric series.

    ``a[k, n]`` is the coefficient of ``x**k`` in ``K_n(x; p, N)``, expanded
    from ``sum_k (-n)_k (-x)_k / ((-N)_k k!) p**-k``.
    """
    _check_p(p)
    a = np.zeros((max_order + 1, max_order + 1))
    for n in range(max_order + 1):
        for k in range(n + 1):
            scale = poch(-n, k) / (poch(-N, k) * math.factorial(k) * p**k)
            # (-x)_k = prod_{i<k} (i - x), ascending coefficients in x
            rising = np.polynomial.polynomial.polyfromroots(np.arange(k)) * (-1) ** k
            a[: k + 1, n] += scale * rising
    return a


def krawtchouk_values(N: int, p: float, max_order: int) -> np.ndarray:
    """``K_n(x; p, N)`` for ``n <= max_order`` and ``x = 0..N`` by three-term recurrence."""
    _check_p(p)
    x = np.arange(N + 1, dtype=np.float64)
    K = np.empty((max_order + 1, N + 1))
    K[0] = 1.0
    for n in range(max_order):
        prev = K[n - 1] if n else 0.0
        K[n + 1] = ((p * (N - n) + n * (1 - p) - x) * K[n] - n * (1 - p) * prev) / (p * (N - n))
    return K


@dataclass(frozen=True, eq=False)
class KrawtchoukBasis:
    """Weighted Krawtchouk polynomials on ``x = 0..N`` (``N + 1`` points)."""

    N: int
    p: float
    values: np.ndarray
    kbar: np.ndarray
    a: np.ndarray
    rho: np.ndarray
    weight: np.ndarray

    @property
    def max_order(self) -> int:
        return self.values.shape[0] - 1


@lru_cache(maxsize=64)
def krawtchouk_basis(N: int, p: float, max_order: int = 3) -> KrawtchoukBasis:
    """Cached, read-only basis shared by every caller with the same parameters."""
    _check_p(p)
    if not 0 <= max_order <= N:
        raise ParameterError(f"need 0 <= max_order <= N, got max_order={max_order}, N={N}")
    values = krawtchouk_values(N, p, max_order)
    w = krawtchouk_weight(np.arange(N + 1), p, N)
    rho = np.array([krawtchouk_rho(n, p, N) for n in range(max_order + 1)])
    kbar = values * np.sqrt(w[None, :] / rho[:, None])
    a = krawtchouk_coefficients(N, p, max_order)
    for arr in (values, w, rho, kbar, a):
        arr.setflags(write=False)
    return KrawtchoukBasis(N=N, p=p, values=values, kbar=kbar, a=a, rho=rho, weight=w)


def weighted_image(img, p_x: float, p_y: float) -> np.ndarray:
    """Multiply ``f`` by ``sqrt(w(x; p_x, N-1) * w(y; p_y, M-1))``."""
    f = _as_plane(img)
    h, w = f.shape
    wx = krawtchouk_weight(np.arange(w), p_x, w - 1)
    wy = krawtchouk_weight(np.arange(h), p_y, h - 1)
    return np.sqrt(np.outer(wy, wx)) * f


def _bases(shape, p_x: float, p_y: float, max_order: int = 3):
    # an axis of L pixels carries polynomials up to degree L - 1 only
    h, w = shape
    return (
        krawtchouk_basis(w - 1, p_x, min(max_order, w - 1)),
        krawtchouk_basis(h - 1, p_y, min(max_order, h - 1)),
    )


def _expand(table: np.ndarray, bx: KrawtchoukBasis, by: KrawtchoukBasis, orders) -> np.ndarray:
    """Combine moment tables ``(..., i, j)`` into Krawtchouk moments via ``a`` coefficients.

    Orders above an axis' polynomial degree contribute zero.
    """
    out = []
    for n, m in orders:
        if n > bx.max_order or m > by.max_order:
            out.append(np.zeros(table.shape[:-2]))
            continue
        ax = bx.a[: n + 1, n]
        ay = by.a[: m + 1, m]
        q = np.einsum("i,...ij,j->...", ax, table[..., : n + 1, : m + 1], ay)
        out.append(q / math.sqrt(bx.rho[n] * by.rho[m]))
    return np.stack(out, axis=-1)


def weighted_krawtchouk_moments(img, p_x: float, p_y: float, orders=ORDER_SET) -> np.ndarray:
    """Weighted 2-D Krawtchouk moments through geometric moments of the weighted image.

    ``Q[n, m] = (rho_n rho_m) ** -0.5 * sum_ij a[i, n] a[j, m] mw[i, j]`` where
    ``mw`` are the geometric moments of :func:`weighted_image`.
    """
    f = _as_plane(img)
    orders = list(orders)
    top = max(max(n, m) for n, m in orders)
    bx, by = _bases(f.shape, p_x, p_y, top)
    mom = geometric_moments(weighted_image(f, p_x, p_y), top).m
    return _expand(mom, bx, by, orders)


def krawtchouk_moments_direct(img, p_x: float, p_y: float, orders=ORDER_SET) -> np.ndarray:
    """Same quantity by direct projection: ``sum f(x, y) Kbar_n(x) Kbar_m(y)``."""
    f = _as_plane(img)
    orders = list(orders)
    top = max(max(n, m) for n, m in orders)
    bx, by = _bases(f.shape, p_x, p_y, top)
    return np.array(
        [
            by.kbar[m] @ f @ bx.kbar[n] if n <= bx.max_order and m <= by.max_order else 0.0
            for n, m in orders
        ]
    )


# --------------------------------------------------------------------------
# invariant Krawtchouk descriptor
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IkmDescriptor:
    values: np.ndarray
    order_pairs: tuple[tuple[float, float], ...]

    def __len__(self):
        return len(self.values)


def ikm_batch(
    patches: np.ndarray, order_pairs: Sequence[tuple[float, float]] = SINGLE_ORDER
) -> tuple[np.ndarray, np.ndarray]:
    """Describe a stack of patches ``(n, side, side)`` holding 8-bit intensities.

    Returns ``(descriptors, valid)`` where ``descriptors`` is
    ``(n, 6 * len(order_pairs))`` and ``valid`` flags patches with non-zero
    mass; rows of invalid patches are NaN.
    """
    stack = np.asarray(patches, dtype=np.float64) / 255.0
    if stack.ndim == 2:
        stack = stack[None]
    v = _invariant_batch(stack, 3)[0]
    shape = stack.shape[1:]
    parts = []
    for p_x, p_y in order_pairs:
        bx, by = _bases(shape, p_x, p_y, 3)
        parts.append(_expand(v, bx, by, ORDER_SET))
    desc = np.concatenate(parts, axis=-1)
    valid = np.isfinite(desc).all(axis=1)
    return desc, valid


def ikm_descriptor(patch, order_pairs: Sequence[tuple[float, float]] = SINGLE_ORDER) -> IkmDescriptor:
    """Invariant Krawtchouk moments of one patch.

    For each ``(p_x, p_y)`` the six orders of :data:`ORDER_SET` are formed
    from the patch's invariant geometric moments; pairs are concatenated in
    the order given.
    """
    plane = _as_plane(patch)
    for p_x, p_y in order_pairs:
        _check_p(p_x)
        _check_p(p_y)
    desc, valid = ikm_batch(plane[None], order_pairs)
    if not valid[0]:
        raise DegenerateImage("patch has zero total intensity")
    return IkmDescriptor(values=desc[0], order_pairs=tuple(map(tuple, order_pairs)))
