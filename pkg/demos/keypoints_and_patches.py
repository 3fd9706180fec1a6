"""
Difference-of-Gaussians keypoints and patch extraction
======================================================

Keypoints mark blob-like structures at several scales.  A 30x30 patch
around each keypoint is what the invariant moment descriptor describes.
"""

import numpy as np

from smikm.imagecore import ImageBuf, to_grayscale
from smikm.keypoints import detect_keypoints, extract_patches, keypoints_or_grid
from smikm.moments import ikm_batch
from smikm.saliency import compute_saliency_hc, segment
from smikm.synthetic import render

# One bright square on a dark field.
a = np.zeros((64, 64), np.uint8)
a[28:35, 28:35] = 255
for kp in detect_keypoints(ImageBuf(a))[:3]:
    print(f"blob keypoint at {tuple(kp.position)} scale {kp.scale:.2f} response {kp.response:.3f}")

# A flat image has no keypoints, so a regular grid takes over.
flat = ImageBuf(np.full((100, 100), 90, np.uint8))
print("grid fallback:", [tuple(k.position) for k in keypoints_or_grid(flat)])

# On a synthetic photo-like image.
img = ImageBuf(render(3, np.random.default_rng(1)))
gray = to_grayscale(img)
kps = keypoints_or_grid(gray)
masks = segment(compute_saliency_hc(img))
patches = extract_patches(gray, kps, masks, 30)
print(f"{len(kps)} keypoints, {patches.in_foreground.sum()} of them in the foreground")

desc, valid = ikm_batch(patches.patches)
print("descriptor matrix:", desc.shape, "valid rows:", valid.sum())
print(np.round(desc[:3], 4))
