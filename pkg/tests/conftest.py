import numpy as np
import pytest

from memeclf.feature_store import FeatureMatrix, Manifest, MemeEntry, SyntheticSpec, gen_synthetic
from memeclf.tasks import synthetic_task


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_matrix(ids, vectors, source="synthetic"):
    vectors = np.asarray(vectors, dtype=np.float32)
    return FeatureMatrix(source, vectors.shape[1], list(ids), vectors)


def make_binary_manifest(pos_ids, neg_ids, label="label_0", split="train"):
    """Single-label manifest: pos_ids carry 1, neg_ids carry 0."""
    task = synthetic_task(1)
    entries = [MemeEntry(i, text=f"meme {i}", labels={label: 1}) for i in pos_ids]
    entries += [MemeEntry(i, text=f"meme {i}", labels={label: 0}) for i in neg_ids]
    return Manifest(entries, task, split)


@pytest.fixture
def small_synthetic():
    """2 labels x 2 clusters x 25 samples, d=16: quickly separable."""
    spec = SyntheticSpec(
        label_count=2, clusters_per_label=2, dim=16, samples_per_cluster=25,
        cluster_spread=0.05, seed=99,
    )
    return gen_synthetic(spec)
