"""Difference-of-Gaussians keypoint detection and patch extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import ChannelError, EmptyResult, ParameterError
from .imagecore import ImageBuf, PixelCoord, crop_patches
from .saliency import RegionMasks

N_OCTAVES = 3
SCALES_PER_OCTAVE = 3
BASE_SIGMA = 1.6
DOG_THRESHOLD = 0.03
MAX_KEYPOINTS = 500
PATCH_SIDE = 30
GRID_STEP = 32


class Keypoint(NamedTuple):
    position: PixelCoord
    scale: float
    response: float


@dataclass(frozen=True, eq=False)
class PatchSet:
    """Patches stacked as ``(n, side, side)`` uint8 alongside their keypoints."""

    patches: np.ndarray
    keypoints: tuple[Keypoint, ...]
    in_foreground: np.ndarray

    def __len__(self):
        return len(self.keypoints)

    def __iter__(self):
        for i, kp in enumerate(self.keypoints):
            yield ImageBuf(self.patches[i]), kp, bool(self.in_foreground[i])


# 26-neighbourhood in (scale, y, x), centre excluded
_FOOTPRINT = np.ones((3, 3, 3), dtype=bool)
_FOOTPRINT[1, 1, 1] = False


def _octave_extrema(dog: np.ndarray, threshold: float):
    nb_max = ndimage.maximum_filter(dog, footprint=_FOOTPRINT, mode="nearest")
    nb_min = ndimage.minimum_filter(dog, footprint=_FOOTPRINT, mode="nearest")
    hit = ((dog > nb_max) | (dog < nb_min)) & (np.abs(dog) >= threshold)
    # only interior scales and pixels own a full neighbourhood
    hit[0] = hit[-1] = False
    hit[:, 0, :] = hit[:, -1, :] = False
    hit[:, :, 0] = hit[:, :, -1] = False
    return np.nonzero(hit)


def detect_keypoints(
    gray: ImageBuf,
    threshold: float = DOG_THRESHOLD,
    max_keypoints: int = MAX_KEYPOINTS,
    n_octaves: int = N_OCTAVES,
) -> list[Keypoint]:
    """Scale-space extrema of the difference-of-Gaussians pyramid.

    Intensities are scaled to [0, 1].  The first octave runs on the image
    upsampled by two (bilinear), so octaves sit at scale factors 2, 1, 1/2.
    Each octave blurs its base at ``1.6 * 2 ** (i / 3)`` for ``i = 0..5``
    and the next octave starts from the ``sigma = 3.2`` level subsampled by
    two.  Keypoints come back in full-resolution coordinates, strongest
    first, at most ``max_keypoints``.
    """
    if gray.channels != 1:
        raise ChannelError("keypoint detection needs a single-channel image")
    if min(gray.width, gray.height) < 32:
        raise ParameterError("keypoint detection needs images of at least 32x32")
    k = 2.0 ** (1.0 / SCALES_PER_OCTAVE)
    sigmas = BASE_SIGMA * k ** np.arange(SCALES_PER_OCTAVE + 3)
    base = ndimage.zoom(
        gray.data.astype(np.float64) / 255.0, 2, order=1, mode="nearest", grid_mode=True
    )

    found = []
    for octave in range(n_octaves):
        if min(base.shape) < 8:
            break
        gauss = np.stack([ndimage.gaussian_filter(base, s, mode="nearest") for s in sigmas])
        dog = np.diff(gauss, axis=0)
        si, yi, xi = _octave_extrema(dog, threshold)
        step = 2.0 ** (octave - 1)
        # sample i of this octave lies at i * step - 0.25 full-resolution pixels
        fy = np.floor(yi * step + 0.25).astype(np.int64)
        fx = np.floor(xi * step + 0.25).astype(np.int64)
        fy = np.clip(fy, 0, gray.height - 1)
        fx = np.clip(fx, 0, gray.width - 1)
        for s, y, x, oy, ox in zip(si, yi, xi, fy, fx):
            found.append((float(abs(dog[s, y, x])), int(oy), int(ox), float(sigmas[s] * step)))
        base = gauss[SCALES_PER_OCTAVE][::2, ::2]

    if not found:
        raise EmptyResult("no difference-of-Gaussians extremum passed the threshold")
    found.sort(key=lambda r: (-r[0], r[1], r[2], r[3]))
    return [
        Keypoint(PixelCoord(x, y), scale, resp) for resp, y, x, scale in found[:max_keypoints]
    ]


def grid_keypoints(gray: ImageBuf, step: int = GRID_STEP) -> list[Keypoint]:
    """Fallback keypoints at the centres of a regular ``step``-pixel grid."""
    ys = np.arange(step // 2, gray.height, step)
    xs = np.arange(step // 2, gray.width, step)
    if len(ys) == 0:
        ys = np.array([gray.height // 2])
    if len(xs) == 0:
        xs = np.array([gray.width // 2])
    return [Keypoint(PixelCoord(int(x), int(y)), float(step), 0.0) for y in ys for x in xs]


def keypoints_or_grid(gray: ImageBuf, **kwargs) -> list[Keypoint]:
    try:
        return detect_keypoints(gray, **kwargs)
    except EmptyResult:
        return grid_keypoints(gray)


def extract_patches(
    gray: ImageBuf, kps: list[Keypoint], masks: RegionMasks, side: int = PATCH_SIDE
) -> PatchSet:
    if gray.channels != 1:
        raise ChannelError("patches are cut from the grayscale image")
    if not kps:
        return PatchSet(
            np.zeros((0, side, side), dtype=np.uint8), (), np.zeros(0, dtype=bool)
        )
    centers = np.array([[kp.position.x, kp.position.y] for kp in kps], dtype=np.int64)
    patches = crop_patches(gray.data, centers, side)
    fg = masks.foreground[centers[:, 1], centers[:, 0]]
    return PatchSet(np.ascontiguousarray(patches), tuple(kps), fg.astype(bool))
