"""Small synthetic image collections for demos and tests.

Each class pairs an object shape and colour with a background colour and
texture; positions, sizes, rotations and noise vary per image.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

_CLASSES = (
    # (name, object rgb, background rgb, shape, background stripe period)
    ("disk", (220, 40, 40), (30, 60, 140), "ellipse", 0),
    ("square", (240, 220, 30), (20, 110, 40), "rectangle", 9),
    ("triangle", (250, 250, 250), (90, 50, 20), "triangle", 0),
    ("star", (40, 200, 220), (60, 60, 60), "star", 5),
    ("bar", (200, 60, 200), (200, 180, 150), "bar", 0),
)


def class_names(n_classes: int) -> list[str]:
    return [c[0] for c in _CLASSES[:n_classes]]


def _polygon(shape: str, cx: float, cy: float, r: float, angle: float):
    if shape == "triangle":
        t = angle + np.arange(3) * 2 * np.pi / 3
        rad = np.full(3, r)
    elif shape == "star":
        t = angle + np.arange(10) * np.pi / 5
        rad = np.where(np.arange(10) % 2 == 0, r, 0.45 * r)
    elif shape == "bar":
        t = angle + np.array([0.25, np.pi - 0.25, np.pi + 0.25, -0.25])
        rad = np.full(4, r)
    else:
        t = angle + np.pi / 4 + np.arange(4) * np.pi / 2
        rad = np.full(4, r)
    return [(float(cx + q * np.cos(a)), float(cy + q * np.sin(a))) for q, a in zip(rad, t)]


def render(class_index: int, rng: np.random.Generator, size=(160, 120)) -> np.ndarray:
    """One RGB image (``height x width x 3`` uint8) of the given class."""
    name, fg, bg, shape, period = _CLASSES[class_index]
    w, h = size
    jitter = lambda c: tuple(int(np.clip(v + rng.integers(-25, 26), 0, 255)) for v in c)
    im = Image.new("RGB", size, jitter(bg))
    draw = ImageDraw.Draw(im)
    if period:
        shade = tuple(max(0, v - 40) for v in bg)
        for x in range(int(rng.integers(period)), w, period):
            draw.line([(x, 0), (x, h)], fill=shade, width=2)
    r = float(rng.uniform(0.18, 0.3) * min(w, h))
    cx = float(rng.uniform(r + 4, w - r - 4))
    cy = float(rng.uniform(r + 4, h - r - 4))
    if shape == "ellipse":
        ry = r * float(rng.uniform(0.6, 1.0))
        draw.ellipse([cx - r, cy - ry, cx + r, cy + ry], fill=jitter(fg))
    else:
        draw.polygon(_polygon(shape, cx, cy, r, float(rng.uniform(0, 2 * np.pi))), fill=jitter(fg))
    arr = np.asarray(im, dtype=np.int16)
    arr = arr + rng.integers(-12, 13, size=arr.shape)
    return np.clip(arr, 0, 255).astype(np.uint8)


def write_dataset(
    root, n_classes: int = 5, per_class: int = 10, seed: int = 0, layout: str = "wang", size=(160, 120)
):
    """Write PNGs under ``root`` and return it.

    ``layout="wang"`` names files by integer id with 100 ids reserved per
    class (so ``id // 100`` is the class), ``"tree"`` uses one subdirectory
    per class.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for c in range(n_classes):
        for i in range(per_class):
            arr = render(c, rng, size)
            if layout == "wang":
                path = root / f"{100 * c + i}.png"
            else:
                path = root / _CLASSES[c][0] / f"{i:03d}.png"
                path.parent.mkdir(exist_ok=True)
            Image.fromarray(arr).save(path)
    return root
