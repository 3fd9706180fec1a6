"""
Histogram-contrast saliency and foreground/background split
===========================================================

Colours that differ strongly from the rest of the image get high saliency.
An Otsu threshold on the saliency map then separates the object.
"""

import numpy as np

from smikm.imagecore import ImageBuf
from smikm.saliency import compute_saliency_hc, saliency_to_image, segment
from smikm.synthetic import render

rng = np.random.default_rng(4)
img = ImageBuf(render(0, rng))  # red disk on a blue background
print("image size:", img.width, "x", img.height)

sal = compute_saliency_hc(img)
print("saliency range:", sal.values.min(), sal.values.max())

masks = segment(sal)
fg = masks.foreground
print(f"foreground covers {fg.mean():.1%} of the image")

# The foreground should be mostly the red object.
red = img.data[..., 0].astype(int) - img.data[..., 2]
print("mean red-minus-blue inside :", red[fg].mean().round(1))
print("mean red-minus-blue outside:", red[masks.background].mean().round(1))

# A coarse text rendering of the map, one character per 8x8 block.
small = saliency_to_image(sal).data[::8, ::8].astype(int)
for row in small:
    print("".join(" .:-=+*#%@"[v * 10 // 256] for v in row))
