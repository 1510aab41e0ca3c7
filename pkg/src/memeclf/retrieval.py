"""Exact cosine top-k search over training-meme embeddings.

Brute-force scan, no approximation: explanation fidelity requires the true
nearest training cases. Scores are computed on a float64 copy cached at build
time; selection uses argpartition plus an explicit tie-repair step so results
match a full sort with ascending-id tie-break exactly.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyIndexError, IntegrityError, ShapeError
from .feature_store import FeatureMatrix, read_feature_file, write_feature_file


@dataclass
class Neighbor:
    id: str
    similarity: float
    labels: dict[str, int] | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "similarity": self.similarity, "labels": self.labels}


@dataclass
class EmbeddingIndex:
    model_tag: str
    ids: list[str]
    raw: np.ndarray  # (count, dim) f32, as persisted
    norms: np.ndarray = field(init=False)
    zero_rows: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.raw = np.ascontiguousarray(self.raw, dtype=np.float32)
        if self.raw.ndim != 2:
            raise ShapeError("embeddings must be a 2-D array")
        if len(self.ids) != self.raw.shape[0]:
            raise ShapeError(f"{len(self.ids)} ids for {self.raw.shape[0]} rows")
        if len(set(self.ids)) != len(self.ids):
            raise IntegrityError("index ids are not unique")
        self._raw64 = self.raw.astype(np.float64)
        self.norms = np.linalg.norm(self._raw64, axis=1)
        self.zero_rows = self.norms == 0.0

    @property
    def count(self) -> int:
        return self.raw.shape[0]

    @property
    def dim(self) -> int:
        return self.raw.shape[1]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|), clamped to [-1, 1]; 0 when either norm is 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def build_index(ids: list[str], embeddings: np.ndarray, model_tag: str) -> EmbeddingIndex:
    return EmbeddingIndex(model_tag, list(ids), np.asarray(embeddings))


def query_top_k(index: EmbeddingIndex, q: np.ndarray, k: int) -> list[Neighbor]:
    """Exactly min(k, count) neighbors, similarity descending, ties by ascending id."""
    if index.count == 0:
        raise EmptyIndexError("cannot query an empty index")
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ShapeError(f"query shape {q.shape} != ({index.dim},)")

    qnorm = np.linalg.norm(q)
    if qnorm == 0.0:
        sims = np.zeros(index.count)
    else:
        # zero-norm rows match nothing: their dot product is 0, denom patched to 1
        denom = np.where(index.zero_rows, 1.0, index.norms * qnorm)
        sims = (index._raw64 @ q) / denom
        np.clip(sims, -1.0, 1.0, out=sims)

    kk = min(k, index.count)
    if kk == index.count:
        chosen = np.arange(index.count)
    else:
        part = np.argpartition(-sims, kk - 1)[:kk]
        boundary = sims[part].min()
        strict = np.flatnonzero(sims > boundary)
        tied = np.flatnonzero(sims == boundary)
        need = kk - len(strict)
        tied_sorted = sorted(tied, key=lambda i: index.ids[i])
        chosen = np.concatenate([strict, np.array(tied_sorted[:need], dtype=np.int64)])
    order = sorted(chosen, key=lambda i: (-sims[i], index.ids[i]))
    return [Neighbor(index.ids[i], float(sims[i])) for i in order]


# -- persistence: MEMF vectors plus a JSON sidecar ------------------------------


def index_paths(base: str | Path) -> tuple[Path, Path]:
    # append, never with_suffix: base stems may contain dots
    base = Path(base)
    return base.parent / (base.name + ".memf"), base.parent / (base.name + ".json")


def save_index(base: str | Path, index: EmbeddingIndex) -> None:
    memf_path, sidecar_path = index_paths(base)
    matrix = FeatureMatrix("synthetic", index.dim, index.ids, index.raw)
    write_feature_file(memf_path, matrix)
    checksum = zlib.crc32(memf_path.read_bytes()) & 0xFFFFFFFF
    sidecar = {
        "model_tag": index.model_tag,
        "dim": index.dim,
        "count": index.count,
        "checksum": f"crc32:{checksum:08x}",
    }
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")


def load_index(base: str | Path) -> EmbeddingIndex:
    memf_path, sidecar_path = index_paths(base)
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    checksum = zlib.crc32(memf_path.read_bytes()) & 0xFFFFFFFF
    if sidecar.get("checksum") != f"crc32:{checksum:08x}":
        raise IntegrityError(f"{memf_path}: checksum does not match sidecar")
    matrix = read_feature_file(memf_path)
    if matrix.count != sidecar.get("count") or matrix.dim != sidecar.get("dim"):
        raise IntegrityError(f"{memf_path}: sidecar count/dim mismatch")
    return EmbeddingIndex(sidecar["model_tag"], matrix.ids, matrix.vectors)
