"""Region colour/texture histograms and the eight-slot feature bundle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, TooSmall
from .imagecore import ImageBuf, ensure_rgb, rgb_to_hsv
from .saliency import RegionMasks, SaliencyMap, saliency_to_image

HS_BINS = 32
LBP_BINS = 256

#: Slot order of a :class:`FeatureBundle`.
SLOTS = ("f_Hh", "f_Hs", "f_LBPv", "f_Kraw", "b_Hh", "b_Hs", "b_LBPv", "sm_LBP")
DEFAULT_WEIGHTS = (2.0, 2.0, 3.0, 1.5, 1.0, 1.0, 2.0, 1.5)

# neighbour offsets (dy, dx), clockwise from the top-left; bit k is neighbour k
_LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def normalize_hist(counts) -> np.ndarray:
    """L1-normalise; an all-zero input stays all-zero."""
    h = np.asarray(counts, dtype=np.float64)
    total = h.sum()
    return h / total if total > 0 else np.zeros_like(h)


def lbp_code_map(gray) -> np.ndarray:
    """8-neighbour, radius-1 LBP codes of the interior pixels.

    A neighbour sets its bit when it is ``>=`` the centre, so the output is
    ``(height - 2, width - 2)``.
    """
    plane = gray.data if isinstance(gray, ImageBuf) else np.asarray(gray)
    if plane.ndim != 2:
        raise DimensionMismatch("LBP needs a single-channel plane")
    h, w = plane.shape
    if min(h, w) < 3:
        raise TooSmall("LBP needs at least a 3x3 image")
    centre = plane[1:-1, 1:-1]
    codes = np.zeros(centre.shape, dtype=np.uint8)
    for bit, (dy, dx) in enumerate(_LBP_OFFSETS):
        nb = plane[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (nb >= centre).astype(np.uint8) << bit
    return codes


def masked_histogram(plane, mask, bins: int, value_range: tuple[float, float] | None = None) -> np.ndarray:
    """Normalised histogram of ``plane`` over the pixels where ``mask`` holds.

    Integer planes (LBP codes) are counted per value ``0..bins-1``.  Float
    planes are binned uniformly over ``value_range`` (default ``[0, 1]``)
    with the upper edge folded into the last bin.
    """
    plane = np.asarray(plane)
    mask = np.asarray(mask, dtype=bool)
    if plane.shape != mask.shape:
        raise DimensionMismatch(f"plane {plane.shape} and mask {mask.shape} differ")
    vals = plane[mask]
    if np.issubdtype(plane.dtype, np.integer) and value_range is None:
        idx = vals.astype(np.int64)
    else:
        lo, hi = value_range or (0.0, 1.0)
        idx = np.floor((vals.astype(np.float64) - lo) / (hi - lo) * bins).astype(np.int64)
        idx = np.clip(idx, 0, bins - 1)
    return normalize_hist(np.bincount(idx, minlength=bins)[:bins])


@dataclass(frozen=True, eq=False)
class FeatureBundle:
    """The eight normalised histograms describing one image, plus fusion weights."""

    f_Hh: np.ndarray
    f_Hs: np.ndarray
    f_LBPv: np.ndarray
    f_Kraw: np.ndarray
    b_Hh: np.ndarray
    b_Hs: np.ndarray
    b_LBPv: np.ndarray
    sm_LBP: np.ndarray
    weights: tuple[float, ...] = field(default=DEFAULT_WEIGHTS)

    def __post_init__(self):
        if len(self.weights) != len(SLOTS):
            raise DimensionMismatch(f"expected {len(SLOTS)} weights, got {len(self.weights)}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def histograms(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in SLOTS)

    def __len__(self):
        return len(SLOTS)

    def __eq__(self, other):
        if not isinstance(other, FeatureBundle):
            return NotImplemented
        return self.weights == other.weights and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.histograms, other.histograms)
        )


def build_bundle(
    img: ImageBuf,
    masks: RegionMasks,
    sal: SaliencyMap,
    word_hist,
    weights=DEFAULT_WEIGHTS,
    hs_bins: int = HS_BINS,
    lbp_bins: int = LBP_BINS,
) -> FeatureBundle:
    rgb = ensure_rgb(img)
    hsv = rgb_to_hsv(rgb)
    fg = masks.foreground
    bg = masks.background
    # V = max(R, G, B); kept in 8 bits so LBP comparisons are exact
    v8 = rgb.data.max(axis=2)
    lbp_v = lbp_code_map(v8)
    inner = (slice(1, -1), slice(1, -1))
    sm_codes = lbp_code_map(saliency_to_image(sal))
    return FeatureBundle(
        f_Hh=masked_histogram(hsv.h, fg, hs_bins),
        f_Hs=masked_histogram(hsv.s, fg, hs_bins),
        f_LBPv=masked_histogram(lbp_v, fg[inner], lbp_bins),
        f_Kraw=normalize_hist(word_hist),
        b_Hh=masked_histogram(hsv.h, bg, hs_bins),
        b_Hs=masked_histogram(hsv.s, bg, hs_bins),
        b_LBPv=masked_histogram(lbp_v, bg[inner], lbp_bins),
        sm_LBP=masked_histogram(sm_codes, np.ones(sm_codes.shape, dtype=bool), lbp_bins),
        weights=weights,
    )
