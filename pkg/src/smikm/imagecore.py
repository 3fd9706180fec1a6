"""Raster container, decoding, colour conversion and patch cropping.

Coordinates follow one convention throughout the package: ``x`` is the
column index (width axis) and ``y`` the row index (height axis), both
0-based.  Pixel ``(x, y)`` of an :class:`ImageBuf` is ``img.data[y, x]``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage.color import rgb2hsv

from .errors import ChannelError, DecodeError, ParameterError


@dataclass(frozen=True, eq=False)
class ImageBuf:
    """8-bit raster, shape ``(height, width)`` or ``(height, width, 3)``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise ChannelError(f"unsupported raster shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError("image must be at least 1x1")
        if arr is self.data:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def __eq__(self, other):
        if not isinstance(other, ImageBuf):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"ImageBuf(width={self.width}, height={self.height}, channels={self.channels})"


@dataclass(frozen=True, eq=False)
class HsvImage:
    """Hue, saturation and value planes, each in [0, 1]."""

    h: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def height(self) -> int:
        return self.h.shape[0]

    @property
    def width(self) -> int:
        return self.h.shape[1]


class PixelCoord(NamedTuple):
    x: int
    y: int


def decode_image(data: bytes) -> ImageBuf:
    """Decode PNG or JPEG bytes into an RGB or grayscale :class:`ImageBuf`."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DecodeError(f"unsupported format {im.format!r}")
            im.load()
            if im.mode in ("L", "1"):
                im = im.convert("L")
            elif im.mode != "RGB":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(str(exc)) from exc
    return ImageBuf(arr)


def read_image(path) -> ImageBuf:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(img: ImageBuf) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img.data)).save(buf, format="PNG")
    return buf.getvalue()


def ensure_rgb(img: ImageBuf) -> ImageBuf:
    """Replicate a grayscale plane into three channels; RGB passes through."""
    if img.channels == 3:
        return img
    return ImageBuf(np.repeat(img.data[:, :, None], 3, axis=2))


def rgb_to_hsv(img: ImageBuf) -> HsvImage:
    if img.channels != 3:
        raise ChannelError(f"rgb_to_hsv needs 3 channels, got {img.channels}")
    hsv = rgb2hsv(img.data)
    return HsvImage(hsv[..., 0], hsv[..., 1], hsv[..., 2])


def to_grayscale(img: ImageBuf) -> ImageBuf:
    """ITU-R 601 luma, rounded half up.  Grayscale input is returned unchanged."""
    if img.channels == 1:
        return img
    rgb = img.data.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return ImageBuf(np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8))


def resize(img: ImageBuf, width: int, height: int, nearest: bool = False) -> ImageBuf:
    resample = Image.NEAREST if nearest else Image.BILINEAR
    out = Image.fromarray(np.asarray(img.data)).resize((width, height), resample=resample)
    return ImageBuf(np.asarray(out))


def _window(center: int, side: int, limit: int) -> np.ndarray:
    return np.clip(np.arange(side) + (center - side // 2), 0, limit - 1)


def crop_patch(img: ImageBuf, center: PixelCoord, side: int = 30) -> ImageBuf:
    """Crop a ``side`` x ``side`` window around ``center``.

    The window spans ``center - side // 2`` to ``center - side // 2 + side - 1``
    on each axis; pixels outside the image replicate the nearest edge.
    """
    if side < 1:
        raise ParameterError("patch side must be >= 1")
    rows = _window(int(center.y), side, img.height)
    cols = _window(int(center.x), side, img.width)
    return ImageBuf(img.data[np.ix_(rows, cols)])


def crop_patches(plane: np.ndarray, centers, side: int = 30) -> np.ndarray:
    """Vectorised :func:`crop_patch` over a 2-D plane; returns ``(n, side, side)``."""
    centers = np.asarray(centers, dtype=np.int64).reshape(-1, 2)
    h, w = plane.shape[:2]
    offs = np.arange(side) - side // 2
    rows = np.clip(centers[:, 1:2] + offs, 0, h - 1)
    cols = np.clip(centers[:, 0:1] + offs, 0, w - 1)
    return plane[rows[:, :, None], cols[:, None, :]]
