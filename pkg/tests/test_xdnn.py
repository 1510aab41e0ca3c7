import math

import numpy as np
import pytest

from memeclf import xdnn
from memeclf.feature_store import Manifest, MemeEntry, SyntheticSpec, gen_synthetic
from memeclf.tasks import synthetic_task

from conftest import make_matrix


def unit_rows(rng, n, d):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# -- unit_normalize -------------------------------------------------------------


def test_unit_normalize_hand_value():
    np.testing.assert_allclose(xdnn.unit_normalize(np.array([3.0, 4.0])), [0.6, 0.8])


def test_unit_normalize_idempotent(rng):
    v = xdnn.unit_normalize(rng.standard_normal(8))
    np.testing.assert_allclose(xdnn.unit_normalize(v), v, atol=1e-7)


def test_unit_normalize_zero_flagged_as_zero():
    out = xdnn.unit_normalize(np.zeros(5))
    assert np.linalg.norm(out) == 0.0  # the zero result is the flag


def test_unit_normalize_rows_mask(rng):
    rows = rng.standard_normal((3, 4))
    rows[1] = 0.0
    normed, zero = xdnn.unit_normalize_rows(rows)
    assert list(zero) == [False, True, False]
    np.testing.assert_allclose(np.linalg.norm(normed[[0, 2]], axis=1), 1.0)


# -- fit_set -----------------------------------------------------------------------


def test_fit_set_single_sample(rng):
    v = unit_rows(rng, 1, 8)[0]
    pset = xdnn.fit_set([("only", v)])
    assert len(pset.prototypes) == 1
    assert pset.prototypes[0].support == 1
    assert pset.prototypes[0].exemplar_id == "only"
    np.testing.assert_allclose(pset.prototypes[0].vector, v)


def test_fit_set_identical_samples_merge(rng):
    v = unit_rows(rng, 1, 8)[0]
    pset = xdnn.fit_set([(f"s{i}", v) for i in range(12)])
    assert len(pset.prototypes) == 1
    assert pset.prototypes[0].support == 12
    assert pset.density(v) == 1.0  # degenerate variance convention


def test_fit_set_rejects_non_unit_input():
    with pytest.raises(ValueError, match="unit-norm"):
        xdnn.fit_set([("bad", np.array([3.0, 4.0]))])


def test_fit_set_scattered_high_dim_explodes(rng):
    n = 200
    samples = [(f"s{i}", v) for i, v in enumerate(unit_rows(rng, n, 128))]
    pset = xdnn.fit_set(samples)
    assert len(pset.prototypes) >= 0.9 * n
    assert sum(p.support for p in pset.prototypes) == n


def test_fit_set_tight_clusters_collapse(rng):
    centers = unit_rows(rng, 2, 32)
    samples = []
    for i in range(100):
        c = centers[i % 2]
        v = xdnn.unit_normalize(c + 0.01 * rng.standard_normal(32))
        samples.append((f"s{i}", v))
    pset = xdnn.fit_set(samples)
    assert len(pset.prototypes) <= 5
    assert sum(p.support for p in pset.prototypes) == 100


def test_fit_set_prototypes_stay_unit_norm(rng):
    samples = [(f"s{i}", v) for i, v in enumerate(unit_rows(rng, 40, 8))]
    pset = xdnn.fit_set(samples)
    for p in pset.prototypes:
        assert abs(np.linalg.norm(p.vector) - 1.0) < 1e-5


# -- fit --------------------------------------------------------------------------


def _two_label_fixture(rng, per_side=20, d=16, spread=0.02):
    task = synthetic_task(2)
    centers = unit_rows(rng, 4, d)  # one per (label, value) block
    rows, entries = [], []
    n = 0
    for li in range(2):
        for block in range(2):
            for _ in range(per_side // 2):
                rows.append(centers[2 * li + block] + spread * rng.standard_normal(d))
                labels = {"label_0": 0, "label_1": 0}
                labels[f"label_{li}"] = 1
                entries.append(MemeEntry(f"e{n}", labels=labels))
                n += 1
    matrix = make_matrix([e.id for e in entries], np.array(rows, dtype=np.float32))
    return matrix, Manifest(entries, task, "train")


def test_fit_builds_positive_and_negative_sets(rng):
    matrix, manifest = _two_label_fixture(rng)
    model = xdnn.fit(matrix, manifest)
    for label in ("label_0", "label_1"):
        pos = model.sets[label][xdnn.POSITIVE]
        neg = model.sets[label][xdnn.NEGATIVE]
        assert pos.count == 20
        assert neg.count == 20
        assert sum(p.support for p in pos.prototypes) == pos.count
        assert sum(p.support for p in neg.prototypes) == neg.count
    assert not model.untrainable


def test_fit_zero_positive_label_is_untrainable(rng):
    task = synthetic_task(2)
    entries = [
        MemeEntry(f"e{i}", labels={"label_0": int(i < 3), "label_1": 0}) for i in range(6)
    ]
    matrix = make_matrix([e.id for e in entries], unit_rows(rng, 6, 8))
    model = xdnn.fit(matrix, Manifest(entries, task, "train"))
    assert "label_1" in model.untrainable
    decision = xdnn.classify(model, unit_rows(rng, 1, 8)[0])
    assert decision.labels["label_1"] is None  # abstain
    assert decision.labels["label_0"] in (0, 1)


def test_fit_tight_clusters_few_prototypes(rng):
    matrix, manifest = _two_label_fixture(rng, per_side=40, spread=0.01)
    model = xdnn.fit(matrix, manifest)
    for label in ("label_0", "label_1"):
        for side in (xdnn.POSITIVE, xdnn.NEGATIVE):
            assert len(model.sets[label][side].prototypes) <= 5


# -- classify ------------------------------------------------------------------------


def test_classify_exact_prototype_match(rng):
    matrix, manifest = _two_label_fixture(rng)
    model = xdnn.fit(matrix, manifest)
    proto = model.sets["label_0"][xdnn.POSITIVE].prototypes[0]
    decision = xdnn.classify(model, proto.vector)
    lam_pos, lam_neg = decision.scores["label_0"]
    assert lam_pos == pytest.approx(1.0, abs=1e-12)
    assert decision.labels["label_0"] == 1
    assert decision.winning_prototype["label_0"] == proto.exemplar_id


def test_classify_antipodal_prototypes_hand_value(rng):
    # one positive prototype at p, one negative at -p: query p
    p = unit_rows(rng, 1, 8)[0]
    task = synthetic_task(1)
    pos = xdnn.fit_set([("pos", p)])
    neg = xdnn.fit_set([("neg", -p)])
    model = xdnn.PrototypeModel(task, 8, {"label_0": {"positive": pos, "negative": neg}})
    decision = xdnn.classify(model, p)
    lam_pos, lam_neg = decision.scores["label_0"]
    assert lam_pos == pytest.approx(1.0, abs=1e-12)
    assert lam_neg == pytest.approx(math.exp(-4.0), abs=1e-12)
    assert decision.labels["label_0"] == 1


def test_classify_tie_resolves_to_zero(rng):
    p = unit_rows(rng, 1, 8)[0]
    task = synthetic_task(1)
    model = xdnn.PrototypeModel(
        task, 8,
        {"label_0": {"positive": xdnn.fit_set([("a", p)]), "negative": xdnn.fit_set([("b", p)])}},
    )
    decision = xdnn.classify(model, p)
    assert decision.scores["label_0"][0] == decision.scores["label_0"][1]
    assert decision.labels["label_0"] == 0


def oracle_classify(model, x):
    """Brute-force reimplementation of the local/global decision stages."""
    x = x / np.linalg.norm(x)
    out = {}
    for label in model.task.labels:
        if label in model.untrainable:
            out[label] = None
            continue
        best = {}
        for side in (xdnn.POSITIVE, xdnn.NEGATIVE):
            scores = [
                (math.exp(-float(np.sum((x - p.vector) ** 2))), p.exemplar_id)
                for p in model.sets[label][side].prototypes
            ]
            best[side] = max(scores, key=lambda t: t[0])
        out[label] = int(best[xdnn.POSITIVE][0] > best[xdnn.NEGATIVE][0])
    return out


def test_classify_matches_oracle_on_random_queries(rng):
    matrix, manifest = _two_label_fixture(rng, per_side=30, spread=0.3)
    model = xdnn.fit(matrix, manifest)
    for _ in range(200):
        q = unit_rows(rng, 1, 16)[0]
        got = xdnn.classify(model, q)
        want = oracle_classify(model, q)
        assert {k: got.labels[k] for k in want} == want
        for label, pair in got.scores.items():
            assert (got.labels[label] == 1) == (pair[0] > pair[1])


def test_classify_matrix_agrees_with_classify(rng):
    matrix, manifest = _two_label_fixture(rng, per_side=20, spread=0.2)
    model = xdnn.fit(matrix, manifest)
    queries = unit_rows(rng, 50, 16)
    batch = xdnn.classify_matrix(model, queries)
    for i in range(50):
        single = xdnn.classify(model, queries[i])
        assert list(batch[i]) == [single.labels[l] for l in model.task.labels]


def test_winning_exemplar_names_real_training_meme(rng):
    matrix, manifest = _two_label_fixture(rng, per_side=24, spread=0.4)
    model = xdnn.fit(matrix, manifest)
    known = set(manifest.ids())
    for _ in range(50):
        decision = xdnn.classify(model, unit_rows(rng, 1, 16)[0])
        for label, winner in decision.winning_prototype.items():
            assert winner in known


# -- prototype_report ------------------------------------------------------------------


def test_report_single_sample_ratio_one(rng):
    v = unit_rows(rng, 1, 8)[0]
    task = synthetic_task(1)
    model = xdnn.PrototypeModel(
        task, 8,
        {"label_0": {"positive": xdnn.fit_set([("a", v)]), "negative": xdnn.fit_set([("b", -v)])}},
    )
    reports = {(r.label, r.side): r for r in xdnn.prototype_report(model)}
    assert reports[("label_0", "positive")].ratio == 1.0


def test_report_identical_samples_ratio_inverse_n(rng):
    v = unit_rows(rng, 1, 8)[0]
    pset = xdnn.fit_set([(f"s{i}", v) for i in range(10)])
    task = synthetic_task(1)
    model = xdnn.PrototypeModel(task, 8, {"label_0": {"positive": pset, "negative": xdnn.fit_set([("n", -v)])}})
    reports = {(r.label, r.side): r for r in xdnn.prototype_report(model)}
    assert reports[("label_0", "positive")].ratio == pytest.approx(0.1)


def test_report_scattered_ratio_high(rng):
    samples = [(f"s{i}", v) for i, v in enumerate(unit_rows(rng, 150, 128))]
    pset = xdnn.fit_set(samples)
    task = synthetic_task(1)
    model = xdnn.PrototypeModel(task, 128, {"label_0": {"positive": pset}})
    report = xdnn.prototype_report(model)[0]
    assert report.ratio >= 0.9
    assert report.top_exemplars[0][1] >= report.top_exemplars[-1][1]


# -- persistence -----------------------------------------------------------------------


def test_model_round_trip(tmp_path, rng):
    matrix, manifest = _two_label_fixture(rng)
    model = xdnn.fit(matrix, manifest)
    base = tmp_path / "protos"
    xdnn.save_model(base, model)
    back = xdnn.load_model(base)
    assert back.task.name == model.task.name
    assert back.dim == model.dim
    for _ in range(20):
        q = unit_rows(rng, 1, 16)[0]
        a, b = xdnn.classify(model, q), xdnn.classify(back, q)
        assert a.labels == b.labels
        assert a.winning_prototype == b.winning_prototype


def test_model_save_is_deterministic(tmp_path, rng):
    matrix, manifest = _two_label_fixture(rng)
    model = xdnn.fit(matrix, manifest)
    xdnn.save_model(tmp_path / "p1", model)
    xdnn.save_model(tmp_path / "p2", model)
    assert (tmp_path / "p1.memf").read_bytes() == (tmp_path / "p2.memf").read_bytes()
    assert (tmp_path / "p1.json").read_bytes() == (tmp_path / "p2.json").read_bytes()
