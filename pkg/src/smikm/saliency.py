"""Histogram-contrast saliency and foreground/background segmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from skimage.color import rgb2lab

from .errors import ChannelError
from .imagecore import ImageBuf

QUANT_LEVELS = 12
COLOR_COVERAGE = 0.95
MAX_FOREGROUND_FRACTION = 0.95
FALLBACK_FRACTION = 0.25


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class RegionMasks:
    foreground: np.ndarray

    @property
    def background(self) -> np.ndarray:
        return ~self.foreground


def _quantize(rgb: np.ndarray) -> np.ndarray:
    q = (rgb.astype(np.float64) / 255.0 * (QUANT_LEVELS - 1e-4)).astype(np.int64)
    return (q[..., 0] * QUANT_LEVELS + q[..., 1]) * QUANT_LEVELS + q[..., 2]


def _bin_centres(bins: np.ndarray) -> np.ndarray:
    r, rem = np.divmod(bins, QUANT_LEVELS * QUANT_LEVELS)
    g, b = np.divmod(rem, QUANT_LEVELS)
    return np.stack([r, g, b], axis=1).astype(np.float64)


def compute_saliency_hc(img: ImageBuf) -> SaliencyMap:
    """Global histogram-contrast saliency of an RGB image.

    Colours are quantised to 12 levels per channel.  The most frequent
    colours covering 95% of pixels are kept and the remainder reassigned to
    the nearest kept colour.  A colour's saliency is its frequency-weighted
    Lab distance to every other kept colour, smoothed over its
    ``ceil(K / 4)`` nearest colours, and the per-pixel map is min-max
    normalised.
    """
    if img.channels != 3:
        raise ChannelError("histogram-contrast saliency needs an RGB image")
    rgb = img.data
    h, w = rgb.shape[:2]
    codes = _quantize(rgb).ravel()
    bins, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)

    # stable descending sort so equally frequent colours keep bin order
    order = np.argsort(-counts, kind="stable")
    covered = np.cumsum(counts[order])
    n_keep = int(np.searchsorted(covered, COLOR_COVERAGE * codes.size - 1e-9) + 1)
    n_keep = min(n_keep, len(bins))
    kept = order[:n_keep]

    # map every histogram bin onto a kept colour
    remap = np.empty(len(bins), dtype=np.int64)
    remap[kept] = np.arange(n_keep)
    dropped = order[n_keep:]
    if len(dropped):
        d = cdist(_bin_centres(bins[dropped]), _bin_centres(bins[kept]), "sqeuclidean")
        remap[dropped] = np.argmin(d, axis=1)
    label = remap[inverse]

    lab = rgb2lab(rgb).reshape(-1, 3)
    freq = np.bincount(label, minlength=n_keep).astype(np.float64)
    colors = np.stack([np.bincount(label, lab[:, c], minlength=n_keep) for c in range(3)], axis=1)
    colors /= freq[:, None]
    freq /= freq.sum()

    dist = cdist(colors, colors)
    sal = dist @ freq

    m = math.ceil(n_keep / 4)
    if m > 1:
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :m]
        nd = np.take_along_axis(dist, nearest, axis=1)
        total = nd.sum(axis=1)
        smoothed = sal.copy()
        ok = total > 0
        smoothed[ok] = ((total[ok, None] - nd[ok]) * sal[nearest[ok]]).sum(axis=1) / (
            (m - 1) * total[ok]
        )
        sal = smoothed

    pix = sal[label].reshape(h, w)
    lo, hi = pix.min(), pix.max()
    if hi - lo <= 1e-12:
        return SaliencyMap(np.zeros((h, w)))
    return SaliencyMap((pix - lo) / (hi - lo))


def otsu_threshold(values: np.ndarray, nbins: int = 256) -> float:
    """Lower edge of the first foreground bin chosen by Otsu's criterion."""
    idx = np.minimum((values.ravel() * nbins).astype(np.int64), nbins - 1)
    hist = np.bincount(idx, minlength=nbins).astype(np.float64)
    total = hist.sum()
    centres = np.arange(nbins)
    w0 = np.cumsum(hist)
    w1 = total - w0
    s0 = np.cumsum(hist * centres)
    mu0 = s0 / np.where(w0 > 0, w0, 1)
    mu1 = (s0[-1] - s0) / np.where(w1 > 0, w1, 1)
    between = w0 * w1 * (mu0 - mu1) ** 2
    t = int(np.argmax(between))
    return (t + 1) / nbins


def _degenerate(fg: np.ndarray) -> bool:
    frac = fg.mean()
    return frac == 0 or frac > MAX_FOREGROUND_FRACTION


def segment(smap: SaliencyMap) -> RegionMasks:
    """Split a saliency map into foreground and background.

    Otsu threshold first; an empty or >95% foreground retries at twice the
    mean saliency, and if that is still degenerate the top quarter of
    pixels (ties to the earlier raster position) becomes foreground.
    """
    s = smap.values
    fg = s >= otsu_threshold(s)
    if _degenerate(fg):
        fg = s >= 2.0 * s.mean()
    if _degenerate(fg):
        flat = s.ravel()
        n = max(1, int(round(FALLBACK_FRACTION * flat.size)))
        top = np.argsort(-flat, kind="stable")[:n]
        fg = np.zeros(flat.size, dtype=bool)
        fg[top] = True
        fg = fg.reshape(s.shape)
    return RegionMasks(fg)


def saliency_to_image(smap: SaliencyMap) -> ImageBuf:
    """Quantise the map to 8 bits, rounding half up."""
    return ImageBuf(np.clip(np.floor(smap.values * 255.0 + 0.5), 0, 255).astype(np.uint8))
