import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memeclf.errors import AlignmentError, CorruptionError, FormatError, IntegrityError
from memeclf.feature_store import (
    MAMI_TEST_STATS,
    MAMI_TRAIN_STATS,
    FeatureMatrix,
    Manifest,
    MemeEntry,
    SyntheticSpec,
    concat_features,
    gen_synthetic,
    load_manifest,
    read_feature_file,
    save_manifest,
    validate_manifest,
    write_feature_file,
)
from memeclf.tasks import MAMI_B, synthetic_task

from conftest import make_matrix


# -- MEMF round-trip and layout -------------------------------------------------

ids_strategy = st.lists(
    st.text(
        alphabet=st.characters(whitelist_categories=("L", "N"), max_codepoint=0x2FF),
        min_size=1,
        max_size=12,
    ),
    min_size=0,
    max_size=8,
    unique=True,
)


@settings(max_examples=50, deadline=None)
@given(ids=ids_strategy, dim=st.integers(min_value=1, max_value=6), data=st.data())
def test_memf_round_trip_property(tmp_path_factory, ids, dim, data):
    values = data.draw(
        st.lists(
            st.lists(
                st.floats(
                    min_value=-1e6, max_value=1e6, allow_nan=False, width=32
                ),
                min_size=dim,
                max_size=dim,
            ),
            min_size=len(ids),
            max_size=len(ids),
        )
    )
    matrix = make_matrix(ids, np.array(values, dtype=np.float32).reshape(len(ids), dim))
    path = tmp_path_factory.mktemp("memf") / "m.memf"
    write_feature_file(path, matrix)
    back = read_feature_file(path, source=matrix.source)
    assert back == matrix
    assert back.vectors.dtype == np.float32


def test_memf_write_is_deterministic(tmp_path):
    matrix = make_matrix(["a", "b"], [[1.5, -2.0], [0.0, 3.25]])
    p1, p2 = tmp_path / "a.memf", tmp_path / "b.memf"
    write_feature_file(p1, matrix)
    write_feature_file(p2, matrix)
    assert p1.read_bytes() == p2.read_bytes()


def test_memf_empty_matrix_preserves_dim(tmp_path):
    matrix = FeatureMatrix("synthetic", 4, [], np.empty((0, 4), dtype=np.float32))
    path = tmp_path / "empty.memf"
    write_feature_file(path, matrix)
    back = read_feature_file(path)
    assert back.count == 0
    assert back.dim == 4


def test_memf_file_size_matches_layout(tmp_path):
    # layout oracle: 20-byte header + per record (2 + id_len + dim*4) + 4-byte CRC
    ids = ["x", "longer-id", "mid"]
    dim = 2
    matrix = make_matrix(ids, np.zeros((3, dim), dtype=np.float32))
    path = tmp_path / "sized.memf"
    write_feature_file(path, matrix)
    expected = 20 + sum(2 + len(i.encode()) + dim * 4 for i in ids) + 4
    assert path.stat().st_size == expected


def test_memf_nan_rejected_before_write(tmp_path):
    path = tmp_path / "bad.memf"
    with pytest.raises(ValueError, match="finite"):
        matrix = make_matrix(["a"], [[np.nan, 1.0]])
        write_feature_file(path, matrix)
    assert not path.exists()


def test_memf_bad_magic_and_version(tmp_path):
    matrix = make_matrix(["a"], [[1.0]])
    path = tmp_path / "m.memf"
    write_feature_file(path, matrix)
    raw = bytearray(path.read_bytes())

    bad = tmp_path / "bad_magic.memf"
    bad.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(FormatError, match="magic"):
        read_feature_file(bad)

    raw2 = bytearray(raw)
    struct.pack_into("<H", raw2, 4, 9)
    body = bytes(raw2[:-4])
    bad2 = tmp_path / "bad_version.memf"
    bad2.write_bytes(body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))
    with pytest.raises(FormatError, match="version"):
        read_feature_file(bad2)


def test_memf_truncated_body_is_corruption(tmp_path):
    # construct: header claims 10 records but the body carries 9, CRC recomputed
    matrix = make_matrix([f"id{i}" for i in range(10)], np.ones((10, 3), dtype=np.float32))
    path = tmp_path / "ten.memf"
    write_feature_file(path, matrix)
    raw = path.read_bytes()
    record_size = 2 + len("id9") + 3 * 4
    body = raw[: -4 - record_size]
    short = tmp_path / "nine.memf"
    short.write_bytes(body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))
    with pytest.raises(CorruptionError, match="truncated"):
        read_feature_file(short)

    # naive byte truncation breaks the CRC instead
    chopped = tmp_path / "chopped.memf"
    chopped.write_bytes(raw[:-10])
    with pytest.raises(CorruptionError):
        read_feature_file(chopped)


def test_memf_duplicate_id_is_integrity_error(tmp_path):
    buf = bytearray()
    buf += struct.pack("<4sHHIQ", b"MEMF", 1, 0, 1, 2)
    for _ in range(2):
        buf += struct.pack("<H", 3) + b"dup" + struct.pack("<f", 1.0)
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    path = tmp_path / "dup.memf"
    path.write_bytes(bytes(buf))
    with pytest.raises(IntegrityError, match="dup"):
        read_feature_file(path)


# -- concatenation ----------------------------------------------------------------


def test_concat_dims_add_and_rows_align(rng):
    ids = [f"m{i}" for i in range(5)]
    a = make_matrix(ids, rng.standard_normal((5, 4)), source="clip")
    b = make_matrix(ids, rng.standard_normal((5, 3)), source="bertweet")
    out = concat_features(a, b)
    assert out.dim == 7
    assert out.count == 5
    assert out.source == "clip_bertweet"
    for mid in ids:
        np.testing.assert_array_equal(out.row(mid)[:4], a.row(mid))
        np.testing.assert_array_equal(out.row(mid)[4:], b.row(mid))


def test_concat_is_order_independent_in_second_argument(rng):
    ids = [f"m{i}" for i in range(6)]
    a = make_matrix(ids, rng.standard_normal((6, 2)))
    vecs = rng.standard_normal((6, 3)).astype(np.float32)
    b = make_matrix(ids, vecs)
    shuffled = make_matrix(list(reversed(ids)), vecs[::-1])
    out1 = concat_features(a, b)
    out2 = concat_features(a, shuffled)
    assert out1.ids == out2.ids
    np.testing.assert_array_equal(out1.vectors, out2.vectors)


def test_concat_missing_id_names_it(rng):
    a = make_matrix(["x1", "x9"], rng.standard_normal((2, 2)))
    b = make_matrix(["x1"], rng.standard_normal((1, 2)))
    with pytest.raises(AlignmentError, match="x9"):
        concat_features(a, b)


def test_concat_non_canonical_sources_become_synthetic(rng):
    ids = ["a", "b"]
    first = make_matrix(ids, rng.standard_normal((2, 2)), source="syn_strong")
    second = make_matrix(ids, rng.standard_normal((2, 2)), source="syn_weak")
    assert concat_features(first, second).source == "synthetic"


# -- manifest validation ------------------------------------------------------------


def _mami_like_manifest(stats, split):
    """Synthetic manifest replicating the published per-label counts."""
    entries = []
    for i in range(stats.total):
        labels = {
            name: 1 if i < count else 0 for name, count in stats.positives.items()
        }
        entries.append(MemeEntry(f"mami-{split}-{i}", text="t", labels=labels))
    return Manifest(entries, MAMI_B, split)


def test_validate_matches_published_train_counts():
    manifest = _mami_like_manifest(MAMI_TRAIN_STATS, "train")
    report = validate_manifest(manifest, expected=MAMI_TRAIN_STATS)
    assert report.ok
    assert report.total == 10_000
    assert report.positives == {
        "misogynous": 5_000,
        "shaming": 1_274,
        "stereotype": 2_810,
        "objectification": 2_202,
        "violence": 953,
    }


def test_validate_matches_published_test_counts():
    manifest = _mami_like_manifest(MAMI_TEST_STATS, "test")
    report = validate_manifest(manifest, expected=MAMI_TEST_STATS)
    assert report.ok
    assert report.total == 1_000
    assert report.positives["misogynous"] == 500
    assert report.positives["violence"] == 153


def test_validate_counts_equal_brute_force_scan(rng):
    task = synthetic_task(3)
    entries = [
        MemeEntry(f"e{i}", labels={name: int(rng.integers(2)) for name in task.labels})
        for i in range(137)
    ]
    manifest = Manifest(entries, task, "train")
    report = validate_manifest(manifest)
    for name in task.labels:
        assert report.positives[name] == sum(e.labels[name] for e in entries)


def test_validate_empty_manifest_warns():
    report = validate_manifest(Manifest([], synthetic_task(1), "dev"))
    assert report.total == 0
    assert any("empty split" in f.message for f in report.findings)
    assert report.ok  # warning, not error


def test_validate_flags_duplicates_missing_and_bad_values():
    task = synthetic_task(2)
    entries = [
        MemeEntry("a", labels={"label_0": 1, "label_1": 0}),
        MemeEntry("a", labels={"label_0": 1, "label_1": 0}),
        MemeEntry("b", labels={"label_0": 1}),
        MemeEntry("c d", labels={"label_0": 1, "label_1": 2}),
    ]
    report = validate_manifest(Manifest(entries, task, "train"))
    assert not report.ok
    messages = " | ".join(f.message for f in report.findings)
    assert "duplicate id 'a'" in messages
    assert "missing labels ['label_1']" in messages
    assert "whitespace" in messages
    assert "value 2" in messages


def test_validate_expected_mismatch_is_error():
    manifest = _mami_like_manifest(MAMI_TEST_STATS, "test")
    report = validate_manifest(manifest, expected=MAMI_TRAIN_STATS)
    assert not report.ok


def test_manifest_jsonl_round_trip(tmp_path):
    task = synthetic_task(2)
    entries = [
        MemeEntry("m1", text="hello", image_path="img/m1.png", labels={"label_0": 1, "label_1": 0}),
        MemeEntry("m2", text="", image_path=None, labels={"label_0": 0, "label_1": 1}),
    ]
    path = tmp_path / "m.jsonl"
    save_manifest(path, Manifest(entries, task, "train"))
    back = load_manifest(path, task, "train")
    assert [e.id for e in back.entries] == ["m1", "m2"]
    assert back.entries[0].image_path == "img/m1.png"
    assert back.entries[1].labels == {"label_0": 0, "label_1": 1}


# -- synthetic generation -------------------------------------------------------------


def test_gen_synthetic_deterministic():
    spec = SyntheticSpec(2, 2, 8, 10, 0.1, seed=42)
    m1, man1 = gen_synthetic(spec)
    m2, man2 = gen_synthetic(spec)
    assert m1 == m2
    assert [e.labels for e in man1.entries] == [e.labels for e in man2.entries]


def test_gen_synthetic_zero_spread_collapses_to_centers():
    spec = SyntheticSpec(1, 2, 8, 5, 0.0, seed=7)
    matrix, _ = gen_synthetic(spec)
    for c in range(2):
        block = matrix.vectors[c * 5 : (c + 1) * 5]
        assert np.all(block == block[0])
        assert abs(np.linalg.norm(block[0].astype(np.float64)) - 1.0) < 1e-5


def test_gen_synthetic_label_bookkeeping():
    spec = SyntheticSpec(2, 1, 4, 100, 0.2, seed=3)
    _, manifest = gen_synthetic(spec)
    report = validate_manifest(manifest)
    assert report.ok
    assert report.total == 200
    assert report.positives == {"label_0": 100, "label_1": 100}


def test_gen_synthetic_channels_share_layout_across_spreads():
    # same seed, different spread: ids, labels and centers align
    strong = SyntheticSpec(2, 2, 8, 10, 0.05, seed=11)
    weak = SyntheticSpec(2, 2, 8, 10, 0.9, seed=11)
    sm, sman = gen_synthetic(strong)
    wm, wman = gen_synthetic(weak)
    assert sm.ids == wm.ids
    assert [e.labels for e in sman.entries] == [e.labels for e in wman.entries]


def test_gen_synthetic_zero_spread_one_nn_is_perfect():
    # distinct centers at spread 0: nearest neighbor on raw features recovers the label
    spec = SyntheticSpec(2, 2, 16, 10, 0.0, seed=5)
    matrix, manifest = gen_synthetic(spec)
    x = matrix.vectors.astype(np.float64)
    y = manifest.label_matrix()
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    # identical cluster mates exist, so distance-0 neighbors share the label
    nearest = d2.argmin(axis=1)
    assert np.array_equal(y[nearest], y)
