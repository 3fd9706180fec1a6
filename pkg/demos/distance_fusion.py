"""
Chi-square distances and z-score fusion
=======================================

Each of the eight features gives one distance per database image.  The
columns are standardised over the database and summed with weights.
"""

import numpy as np

from smikm.retrieval import chi_square, fuse, zscore_normalize

print("disjoint histograms:", chi_square([1, 0], [0, 1]))
print("identical histograms:", chi_square([0.3, 0.7], [0.3, 0.7]))

rng = np.random.default_rng(2)
# 6 database images x 3 features, on very different scales
d = rng.random((6, 3)) * [1.0, 50.0, 0.01]
z = zscore_normalize(d)
print("column means:", np.round(z.mean(axis=0), 12))
print("column stds :", np.round(z.std(axis=0), 12))

w = np.array([2.0, 1.0, 1.5])
fused = fuse(z, w)
print("ranking:", np.argsort(fused, kind="stable"))
print("ranking with 10x weights:", np.argsort(fuse(z, 10 * w), kind="stable"))
