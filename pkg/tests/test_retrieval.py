import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smikm.bovw import Vocabulary
from smikm.errors import (
    ChecksumError,
    DimensionMismatch,
    FormatVersionError,
    IndexFormatError,
    VocabMismatch,
)
from smikm.features import FeatureBundle
from smikm.retrieval import (
    IndexEntry,
    RetrievalIndex,
    chi_square,
    chi_square_many,
    deserialize_index,
    fuse,
    load_index,
    query,
    save_index,
    serialize_index,
    zscore_normalize,
)

SIZES = (32, 32, 256, 4, 32, 32, 256, 256)


def random_bundle(rng, weights=(2, 2, 3, 1.5, 1, 1, 2, 1.5), sizes=SIZES):
    hs = []
    for n in sizes:
        h = rng.random(n)
        hs.append(h / h.sum())
    return FeatureBundle(*hs, weights=weights)


def random_index(rng, n=6, k=4):
    entries = tuple(IndexEntry(f"{i}.png", f"c{i % 2}", random_bundle(rng)) for i in range(n))
    vocab = Vocabulary(rng.standard_normal((k, 6)))
    return RetrievalIndex(entries, vocab, {"seed": "42", "vocab_k": str(k)})


def test_chi_square_disjoint():
    assert chi_square([1, 0], [0, 1]) == pytest.approx(2.0, abs=1e-9)


def test_chi_square_identical_and_symmetric(rng):
    a, b = rng.random(16), rng.random(16)
    assert chi_square(a, a) < 1e-9
    assert chi_square(a, b) == chi_square(b, a)
    assert chi_square(np.zeros(4), np.zeros(4)) == 0.0


def test_chi_square_many_matches_scalar(rng):
    table = rng.random((5, 10))
    h = rng.random(10)
    assert np.allclose(chi_square_many(h, table), [chi_square(h, row) for row in table])
    with pytest.raises(DimensionMismatch):
        chi_square([1, 2], [1, 2, 3])


def test_zscore_example():
    z = zscore_normalize(np.array([[1.0], [2.0], [3.0]]))
    assert z[:, 0] == pytest.approx([-1.2247449, 0.0, 1.2247449], abs=1e-6)


def test_zscore_constant_column():
    d = np.array([[5.0, 1.0], [5.0, 2.0]])
    z = zscore_normalize(d)
    assert not z[:, 0].any()
    assert z[:, 1].tolist() == [-1.0, 1.0]


def test_fuse():
    n = np.array([[1.0, -1.0], [0.5, 2.0]])
    assert fuse(n, [2, 1]).tolist() == [1.0, 3.0]
    assert fuse(n, [0, 0]).tolist() == [0.0, 0.0]
    with pytest.raises(DimensionMismatch):
        fuse(n, [1, 1, 1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100))
def test_weight_scaling_keeps_ranking(seed, scale):
    rng = np.random.default_rng(seed)
    index = random_index(rng)
    q = random_bundle(rng)
    w = np.array(q.weights)
    a = [i for i, _ in query(index, q, weights=w).ranked]
    b = [i for i, _ in query(index, q, weights=w * scale).ranked]
    assert a == b


def test_self_ranks_first(rng):
    index = random_index(rng, n=8)
    for e in index.entries:
        ranked = query(index, e.bundle).ranked
        assert ranked[0][0] == e.image_id
        assert e.image_id not in [i for i, _ in query(index, e.bundle, exclude_id=e.image_id).ranked]


def test_exclusion_after_normalisation(rng):
    index = random_index(rng, n=5)
    q = index.entries[2].bundle
    full = dict(query(index, q).ranked)
    excluded = dict(query(index, q, exclude_id=index.entries[2].image_id).ranked)
    for k, v in excluded.items():
        assert v == full[k]


def test_single_entry_index(rng):
    index = random_index(rng, n=1)
    result = query(index, random_bundle(rng))
    assert result.ranked == [("0.png", 0.0)]
    assert query(index, index.entries[0].bundle, exclude_id="0.png").ranked == []


def test_entry_order_independent(rng):
    index = random_index(rng, n=7)
    shuffled = RetrievalIndex(index.entries[::-1], index.vocab, index.config_snapshot)
    q = random_bundle(rng)
    a, b = query(index, q).ranked, query(shuffled, q).ranked
    assert [i for i, _ in a] == [i for i, _ in b]
    assert np.allclose([d for _, d in a], [d for _, d in b], rtol=1e-12)


def test_ties_broken_by_id(rng):
    b = random_bundle(rng)
    entries = tuple(IndexEntry(name, "x", b) for name in ("b", "c", "a"))
    index = RetrievalIndex(entries, Vocabulary(np.zeros((4, 6))))
    assert [i for i, _ in query(index, b).ranked] == ["a", "b", "c"]


def test_vocab_mismatch(rng):
    index = random_index(rng, k=4)
    with pytest.raises(VocabMismatch):
        query(index, random_bundle(rng, sizes=(32, 32, 256, 5, 32, 32, 256, 256)))
    with pytest.raises(VocabMismatch):
        RetrievalIndex(index.entries, Vocabulary(np.zeros((5, 6))))


def test_duplicate_ids_rejected(rng):
    b = random_bundle(rng)
    with pytest.raises(ValueError):
        RetrievalIndex((IndexEntry("a", "x", b), IndexEntry("a", "y", b)), Vocabulary(np.zeros((4, 6))))


def test_round_trip(rng, tmp_path):
    index = random_index(rng)
    path = tmp_path / "db.smik"
    save_index(index, path)
    assert load_index(path) == index
    assert path.read_bytes()[:5] == b"SMIK\x01"


def test_serialization_deterministic(rng):
    index = random_index(rng)
    assert serialize_index(index) == serialize_index(deserialize_index(serialize_index(index)))


def test_truncated_file_detected(rng):
    data = serialize_index(random_index(rng))
    for cut in (1, 10, len(data) // 2):
        with pytest.raises(ChecksumError):
            deserialize_index(data[:-cut])


def test_flipped_byte_detected(rng):
    data = bytearray(serialize_index(random_index(rng)))
    data[40] ^= 0xFF
    with pytest.raises(ChecksumError):
        deserialize_index(bytes(data))


def test_version_and_magic(rng):
    data = serialize_index(random_index(rng))
    with pytest.raises(FormatVersionError):
        deserialize_index(data[:4] + b"\x02" + data[5:])
    with pytest.raises(IndexFormatError):
        deserialize_index(b"JUNK" + data[4:])


def test_trailing_payload_rejected(rng):
    data = serialize_index(random_index(rng))
    payload = data[5:-4] + b"\x00"
    forged = data[:5] + payload + struct.pack("<I", zlib.crc32(payload))
    with pytest.raises(IndexFormatError):
        deserialize_index(forged)
