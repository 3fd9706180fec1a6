"""
Visual vocabulary with k-means
==============================

Pooled descriptors are clustered; each centroid is a visual word and an
image becomes a histogram of word occurrences over its foreground patches.
"""

import time

import numpy as np

from smikm.bovw import kmeans, quantize, train_vocabulary, word_histogram

rng = np.random.default_rng(0)
centres = rng.normal(0, 5, (4, 6))
X = np.vstack([c + rng.normal(0, 0.3, (250, 6)) for c in centres])

vocab = train_vocabulary(X, k=4, seed=42)
print("vocabulary:", vocab.k, "words of dimension", vocab.dim)

# Inertia never goes up during Lloyd iterations.
res = kmeans(X, 4, seed=42)
print("inertia per iteration:", np.round(res.inertia_history, 1))

print("word of the first centroid:", quantize(vocab.centroids[0], vocab))
flags = rng.random(len(X)) < 0.5
print("word histogram:", np.round(word_histogram(X, flags, vocab), 3))

# Clustering cost grows with descriptor length, the reason for compact
# six-value descriptors.
for d in (6, 30, 128):
    Y = rng.standard_normal((10_000, d))
    t0 = time.perf_counter()
    kmeans(Y, 50, seed=0)
    print(f"dim {d:3d}: {time.perf_counter() - t0:.2f}s")
