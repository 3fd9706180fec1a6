"""Chi-square distances, z-score fusion, ranking and the on-disk index."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .bovw import Vocabulary
from .errors import (
    ChecksumError,
    DimensionMismatch,
    FormatVersionError,
    IndexFormatError,
    VocabMismatch,
)
from .features import SLOTS, FeatureBundle

EPS = 1e-10
MAGIC = b"SMIK"
FORMAT_VERSION = 1


def chi_square(h1, h2) -> float:
    """``sum (a - b)**2 / (a + b + 1e-10)``."""
    a = np.asarray(h1, dtype=np.float64)
    b = np.asarray(h2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"histograms of {a.size} and {b.size} bins")
    return float(((a - b) ** 2 / (a + b + EPS)).sum())


def chi_square_many(h, table: np.ndarray) -> np.ndarray:
    """Chi-square distance from ``h`` to every row of ``table``."""
    h = np.asarray(h, dtype=np.float64)
    if table.shape[-1] != h.shape[-1]:
        raise DimensionMismatch(f"histograms of {h.size} and {table.shape[-1]} bins")
    return ((table - h) ** 2 / (table + h + EPS)).sum(axis=-1)


def zscore_normalize(distances: np.ndarray) -> np.ndarray:
    """Standardise each column (one feature) over the rows (database images).

    Population standard deviation; a column with zero spread maps to zeros.
    """
    d = np.asarray(distances, dtype=np.float64)
    mu = d.mean(axis=0)
    sd = d.std(axis=0)
    out = np.zeros_like(d)
    ok = sd > 0
    out[:, ok] = (d[:, ok] - mu[ok]) / sd[ok]
    return out


def fuse(normalized: np.ndarray, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    n = np.asarray(normalized, dtype=np.float64)
    if n.shape[-1] != w.size:
        raise DimensionMismatch(f"{n.shape[-1]} feature columns vs {w.size} weights")
    return n @ w


@dataclass(frozen=True, eq=False)
class IndexEntry:
    image_id: str
    class_label: str
    bundle: FeatureBundle

    def __eq__(self, other):
        if not isinstance(other, IndexEntry):
            return NotImplemented
        return (self.image_id, self.class_label) == (other.image_id, other.class_label) and (
            self.bundle == other.bundle
        )


@dataclass(frozen=True, eq=False)
class RetrievalIndex:
    entries: tuple[IndexEntry, ...]
    vocab: Vocabulary
    config_snapshot: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.image_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("image ids must be unique within an index")
        for e in entries:
            if e.bundle.f_Kraw.size != self.vocab.k:
                raise VocabMismatch(
                    f"{e.image_id}: word histogram has {e.bundle.f_Kraw.size} bins, "
                    f"vocabulary {self.vocab.k}"
                )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "config_snapshot", dict(self.config_snapshot))
        # per-slot tables, rows aligned with entries
        tables = tuple(
            np.array([e.bundle.histograms[s] for e in entries]).reshape(len(entries), -1)
            for s in range(len(SLOTS))
        )
        object.__setattr__(self, "_tables", tables)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, RetrievalIndex):
            return NotImplemented
        return (
            self.entries == other.entries
            and self.vocab == other.vocab
            and dict(self.config_snapshot) == dict(other.config_snapshot)
        )

    def feature_distances(self, bundle: FeatureBundle) -> np.ndarray:
        """Chi-square distance per slot, shape ``(len(index), 8)``."""
        if bundle.f_Kraw.size != self.vocab.k:
            raise VocabMismatch(
                f"query word histogram has {bundle.f_Kraw.size} bins, vocabulary {self.vocab.k}"
            )
        cols = [chi_square_many(h, table) for h, table in zip(bundle.histograms, self._tables)]
        return np.stack(cols, axis=1) if cols else np.zeros((0, len(SLOTS)))


@dataclass(frozen=True, eq=False)
class RankedResult:
    ranked: list[tuple[str, float]]
    per_feature_distances: np.ndarray | None = None
    ids: tuple[str, ...] = ()

    def __len__(self):
        return len(self.ranked)

    def __iter__(self):
        return iter(self.ranked)


def query(
    index: RetrievalIndex,
    query_bundle: FeatureBundle,
    exclude_id: str | None = None,
    weights=None,
) -> RankedResult:
    """Rank every index entry by fused, z-scored chi-square distance.

    Normalisation runs over the whole index; the entry named
    ``exclude_id`` (the query itself, when it is indexed) is dropped only
    afterwards.  Equal fused distances fall back to image id order.
    """
    if len(index) == 0:
        return RankedResult([], np.zeros((0, len(SLOTS))))
    raw = index.feature_distances(query_bundle)
    w = query_bundle.weights if weights is None else weights
    fused = fuse(zscore_normalize(raw), w)
    ids = [e.image_id for e in index.entries]
    order = sorted(range(len(ids)), key=lambda i: (fused[i], ids[i]))
    ranked = [(ids[i], float(fused[i])) for i in order if ids[i] != exclude_id]
    return RankedResult(ranked, raw, tuple(ids))


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------
#
# layout (little endian):
#   "SMIK" | u8 version | payload | u32 crc32(payload)
# payload:
#   str ikm_mode | u32 k | u32 dim | k*dim f64 centroids
#   u32 n_config | n_config * (str key, str value)
#   u32 n_entries | entries
# entry:
#   str image_id | str class_label | 8 f64 weights | 8 * (u32 bins, bins f64)
# str: u32 byte length + UTF-8 bytes


def _pack_str(out: list, s: str) -> None:
    b = s.encode("utf-8")
    out.append(struct.pack("<I", len(b)))
    out.append(b)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise IndexFormatError("index payload ends early")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64s(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)

    def str(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def serialize_index(index: RetrievalIndex) -> bytes:
    out: list[bytes] = []
    vocab = index.vocab
    _pack_str(out, vocab.ikm_mode)
    out.append(struct.pack("<II", vocab.k, vocab.dim))
    out.append(np.ascontiguousarray(vocab.centroids, dtype="<f8").tobytes())
    cfg = dict(index.config_snapshot)
    out.append(struct.pack("<I", len(cfg)))
    for key in sorted(cfg):
        _pack_str(out, key)
        _pack_str(out, str(cfg[key]))
    out.append(struct.pack("<I", len(index.entries)))
    for e in index.entries:
        _pack_str(out, e.image_id)
        _pack_str(out, e.class_label)
        out.append(np.asarray(e.bundle.weights, dtype="<f8").tobytes())
        for h in e.bundle.histograms:
            out.append(struct.pack("<I", h.size))
            out.append(np.ascontiguousarray(h, dtype="<f8").tobytes())
    payload = b"".join(out)
    return MAGIC + struct.pack("<B", FORMAT_VERSION) + payload + struct.pack("<I", zlib.crc32(payload))


def deserialize_index(data: bytes) -> RetrievalIndex:
    if len(data) < 5 or data[:4] != MAGIC:
        raise IndexFormatError("not an SMIK index file")
    version = data[4]
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported index format version {version}")
    if len(data) < 9:
        raise ChecksumError("index file truncated")
    payload, crc = data[5:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(payload) != crc:
        raise ChecksumError("index checksum mismatch (file truncated or corrupt)")
    r = _Reader(payload)
    ikm_mode = r.str()
    k, dim = r.u32(), r.u32()
    vocab = Vocabulary(r.f64s(k * dim).reshape(k, dim), ikm_mode)
    cfg = {}
    for _ in range(r.u32()):
        key = r.str()
        cfg[key] = r.str()
    entries = []
    for _ in range(r.u32()):
        image_id = r.str()
        label = r.str()
        weights = tuple(r.f64s(len(SLOTS)))
        hists = [r.f64s(r.u32()) for _ in SLOTS]
        entries.append(IndexEntry(image_id, label, FeatureBundle(*hists, weights=weights)))
    if r.pos != len(payload):
        raise IndexFormatError("trailing bytes after index payload")
    return RetrievalIndex(tuple(entries), vocab, cfg)


def save_index(index: RetrievalIndex, path) -> None:
    Path(path).write_bytes(serialize_index(index))


def load_index(path) -> RetrievalIndex:
    return deserialize_index(Path(path).read_bytes())
