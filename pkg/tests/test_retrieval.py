import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memeclf.errors import EmptyIndexError, IntegrityError, ShapeError
from memeclf import retrieval as rt


def naive_top_k(ids, vectors, q, k):
    """Independent oracle: full cosine scoring, full sort, prefix k."""
    sims = [rt.cosine(vectors[i], q) for i in range(len(ids))]
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [(ids[i], sims[i]) for i in order[:k]]


# -- cosine ------------------------------------------------------------------


def test_cosine_self_similarity(rng):
    v = rng.standard_normal(16)
    assert rt.cosine(v, v) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert rt.cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_hand_value():
    got = rt.cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert got == pytest.approx(0.7071067811865476, abs=1e-12)


def test_cosine_zero_norm_convention():
    assert rt.cosine(np.zeros(3), np.ones(3)) == 0.0


def test_cosine_dim_mismatch():
    with pytest.raises(ShapeError):
        rt.cosine(np.ones(2), np.ones(3))


# -- build_index ----------------------------------------------------------------


def test_build_index_norms_cached(rng):
    vecs = rng.standard_normal((3, 8))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    index = rt.build_index(["a", "b", "c"], vecs.astype(np.float32), "test/tag")
    np.testing.assert_allclose(index.norms, 1.0, atol=1e-6)
    assert not index.zero_rows.any()


def test_build_index_flags_zero_rows():
    vecs = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
    index = rt.build_index(["a", "zero"], vecs, "t")
    assert list(index.zero_rows) == [False, True]
    got = rt.query_top_k(index, np.array([1.0, 0.0]), k=2)
    assert got[0].id == "a"
    assert got[1].id == "zero"
    assert got[1].similarity == 0.0


def test_build_index_duplicate_id():
    with pytest.raises(IntegrityError):
        rt.build_index(["a", "a"], np.ones((2, 2), dtype=np.float32), "t")


def test_build_index_rebuild_identical(rng):
    vecs = rng.standard_normal((4, 4)).astype(np.float32)
    i1 = rt.build_index(["a", "b", "c", "d"], vecs, "t")
    i2 = rt.build_index(["a", "b", "c", "d"], vecs, "t")
    np.testing.assert_array_equal(i1.raw, i2.raw)
    np.testing.assert_array_equal(i1.norms, i2.norms)


# -- query_top_k -------------------------------------------------------------------


def test_query_stored_row_is_rank_one(rng):
    vecs = rng.standard_normal((10, 6)).astype(np.float32)
    ids = [f"m{i}" for i in range(10)]
    index = rt.build_index(ids, vecs, "t")
    got = rt.query_top_k(index, vecs[4].astype(np.float64), k=3)
    assert got[0].id == "m4"
    assert got[0].similarity == pytest.approx(1.0, abs=1e-9)


def test_query_k_exceeding_count_returns_all_sorted(rng):
    vecs = rng.standard_normal((5, 4)).astype(np.float32)
    ids = [f"m{i}" for i in range(5)]
    index = rt.build_index(ids, vecs, "t")
    got = rt.query_top_k(index, rng.standard_normal(4), k=50)
    assert len(got) == 5
    sims = [n.similarity for n in got]
    assert sims == sorted(sims, reverse=True)


def test_query_ties_break_by_ascending_id(rng):
    row = rng.standard_normal(4).astype(np.float32)
    vecs = np.stack([row, row, row])
    index = rt.build_index(["zeta", "alpha", "mid"], vecs, "t")
    got = rt.query_top_k(index, row.astype(np.float64), k=2)
    assert [n.id for n in got] == ["alpha", "mid"]


def test_query_empty_index_errors():
    index = rt.build_index([], np.empty((0, 3), dtype=np.float32), "t")
    with pytest.raises(EmptyIndexError):
        rt.query_top_k(index, np.ones(3), k=1)


def test_query_shape_and_k_validation(rng):
    index = rt.build_index(["a"], rng.standard_normal((1, 3)).astype(np.float32), "t")
    with pytest.raises(ShapeError):
        rt.query_top_k(index, np.ones(4), k=1)
    with pytest.raises(ValueError):
        rt.query_top_k(index, np.ones(3), k=0)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
def test_query_scale_invariance(scale):
    rng = np.random.default_rng(7)
    vecs = rng.standard_normal((50, 8)).astype(np.float32)
    ids = [f"m{i:02d}" for i in range(50)]
    index = rt.build_index(ids, vecs, "t")
    q = rng.standard_normal(8)
    base = [n.id for n in rt.query_top_k(index, q, k=10)]
    scaled = [n.id for n in rt.query_top_k(index, q * scale, k=10)]
    assert base == scaled


def test_query_matches_naive_oracle(rng):
    vecs = rng.standard_normal((300, 16)).astype(np.float32)
    vecs[17] = 0.0  # a zero row in the mix
    ids = [f"m{i:03d}" for i in range(300)]
    index = rt.build_index(ids, vecs, "t")
    for _ in range(40):
        q = rng.standard_normal(16)
        k = int(rng.integers(1, 25))
        got = rt.query_top_k(index, q, k)
        want = naive_top_k(ids, vecs.astype(np.float64), q, k)
        assert [n.id for n in got] == [w[0] for w in want]
        np.testing.assert_allclose(
            [n.similarity for n in got], [w[1] for w in want], atol=1e-9
        )


def test_query_duplicated_rows_ascend_by_id(rng):
    base = rng.standard_normal((6, 5)).astype(np.float32)
    vecs = np.vstack([base, base[2]])
    ids = [f"m{i}" for i in range(6)] + ["aaa"]
    index = rt.build_index(ids, vecs, "t")
    got = rt.query_top_k(index, base[2].astype(np.float64), k=2)
    assert [n.id for n in got] == ["aaa", "m2"]


# -- persistence --------------------------------------------------------------------


def test_index_round_trip(tmp_path, rng):
    vecs = rng.standard_normal((7, 4)).astype(np.float32)
    ids = [f"m{i}" for i in range(7)]
    index = rt.build_index(ids, vecs, "clip_bertweet/mami_a")
    base = tmp_path / "index"
    rt.save_index(base, index)
    back = rt.load_index(base)
    assert back.model_tag == "clip_bertweet/mami_a"
    assert back.ids == ids
    np.testing.assert_array_equal(back.raw, index.raw)


def test_index_checksum_validated(tmp_path, rng):
    vecs = rng.standard_normal((3, 4)).astype(np.float32)
    index = rt.build_index(["a", "b", "c"], vecs, "t")
    base = tmp_path / "index"
    rt.save_index(base, index)
    memf = base.with_suffix(".memf")
    corrupted = bytearray(memf.read_bytes())
    corrupted[25] ^= 0xFF
    memf.write_bytes(bytes(corrupted))
    with pytest.raises(IntegrityError):
        rt.load_index(base)
