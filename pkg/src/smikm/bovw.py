"""Visual vocabulary (k-means over IKM descriptors) and word histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DimensionMismatch, NotEnoughData
from .features import normalize_hist

DEFAULT_K = 100
MAX_ITER = 300
TOL = 1e-6


@numba.njit(cache=True)
def _assign(X, C, labels, dist):
    # exact squared Euclidean distance; strict '<' keeps the lowest index on ties
    n, d = X.shape
    k = C.shape[0]
    for i in range(n):
        best = np.inf
        bj = 0
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = X[i, t] - C[j, t]
                s += diff * diff
            if s < best:
                best = s
                bj = j
        labels[i] = bj
        dist[i] = best


def assign_nearest(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest row of ``C`` for every row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if X.ndim != 2 or C.ndim != 2 or X.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"descriptor shape {X.shape} vs centroids {C.shape}")
    labels = np.empty(len(X), dtype=np.int64)
    dist = np.empty(len(X), dtype=np.float64)
    _assign(X, C, labels, dist)
    return labels, dist


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = X[idx]
        closest = np.minimum(closest, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia_history: list[float] = field(default_factory=list)

    @property
    def n_iter(self) -> int:
        return len(self.inertia_history)


def kmeans(
    X: np.ndarray, k: int, seed: int = 0, max_iter: int = MAX_ITER, tol: float = TOL
) -> KMeansResult:
    """Lloyd's algorithm from a seeded k-means++ start.

    Stops after ``max_iter`` iterations or once no centroid moves by
    ``tol`` or more.  A cluster left empty is re-seeded with the point
    farthest from its own centroid.  ``inertia_history`` holds the
    within-cluster sum of squares after each assignment step.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("descriptors must form a 2-D array")
    if len(X) < k:
        raise NotEnoughData(f"{len(X)} descriptors cannot form {k} clusters")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    C = kmeans_plusplus(X, k, rng)
    history = []
    for _ in range(max_iter):
        labels, dist = assign_nearest(X, C)
        history.append(float(dist.sum()))
        counts = np.bincount(labels, minlength=k)
        sums = np.stack(
            [np.bincount(labels, X[:, t], minlength=k) for t in range(X.shape[1])], axis=1
        )
        new = C.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        dist = dist.copy()
        for j in np.flatnonzero(~nz):
            far = int(np.argmax(dist))
            new[j] = X[far]
            dist[far] = -1.0
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    labels, _ = assign_nearest(X, C)
    return KMeansResult(C, labels, history)


@dataclass(frozen=True, eq=False)
class Vocabulary:
    centroids: np.ndarray
    ikm_mode: str = "single"

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim != 2 or len(c) < 1:
            raise DimensionMismatch("centroids must be a non-empty 2-D array")
        if not np.isfinite(c).all():
            raise ValueError("centroids must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (
            self.ikm_mode == other.ikm_mode
            and self.centroids.shape == other.centroids.shape
            and np.array_equal(self.centroids, other.centroids)
        )


def _as_matrix(descriptors) -> np.ndarray:
    if isinstance(descriptors, np.ndarray):
        return np.atleast_2d(descriptors)
    rows = [getattr(d, "values", d) for d in descriptors]
    if not rows:
        return np.zeros((0, 0))
    return np.vstack(rows)


def train_vocabulary(descriptors, k: int = DEFAULT_K, seed: int = 0, ikm_mode: str | None = None) -> Vocabulary:
    """Cluster pooled IKM descriptors into ``k`` visual words."""
    X = _as_matrix(descriptors)
    if len(X) < k:
        raise NotEnoughData(f"{len(X)} descriptors cannot form {k} words")
    if ikm_mode is None:
        ikm_mode = "multi" if X.shape[1] == 30 else "single"
    return Vocabulary(kmeans(X, k, seed).centroids, ikm_mode)


def quantize(desc, vocab: Vocabulary) -> int:
    x = np.asarray(getattr(desc, "values", desc), dtype=np.float64)
    if x.shape != (vocab.dim,):
        raise DimensionMismatch(f"descriptor length {x.size} does not match vocabulary dim {vocab.dim}")
    return int(np.argmin(((vocab.centroids - x) ** 2).sum(axis=1)))


def word_histogram(descs, in_foreground, vocab: Vocabulary) -> np.ndarray:
    """Normalised word counts over the foreground-flagged descriptors."""
    X = _as_matrix(descs)
    flags = np.asarray(in_foreground, dtype=bool)
    if len(flags) != len(X):
        raise DimensionMismatch("one foreground flag per descriptor is required")
    counts = np.zeros(vocab.k)
    if flags.any():
        labels, _ = assign_nearest(X[flags], vocab.centroids)
        counts = np.bincount(labels, minlength=vocab.k)
    return normalize_hist(counts)
