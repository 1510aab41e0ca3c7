"""Prototype-based explainable classifier: single-pass prototype identification
per label followed by local (best prototype per set) and global
(winner-takes-all) decision stages.

The fit pass is order-dependent by construction. A sample founds a new
prototype when it lies beyond the merge radius (30 degrees on the unit sphere)
of every existing prototype; otherwise it is absorbed into the nearest one,
whose vector becomes the support-weighted mean re-normalized to unit length.
Running mean and mean-square-norm statistics are maintained per set and expose
the Cauchy data density as a diagnostic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, IntegrityError
from .feature_store import FeatureMatrix, Manifest, read_feature_file, write_feature_file
from .tasks import Task, get_task

# Squared chord length subtended by 30 degrees on the unit sphere; samples
# farther than this from every prototype found a new one.
MERGE_RADIUS_SQ = 2.0 * (1.0 - math.cos(math.pi / 6.0))

UNIT_NORM_TOL = 1e-5
_DENSITY_EPS = 1e-12

POSITIVE = "positive"
NEGATIVE = "negative"


def unit_normalize(x: np.ndarray) -> np.ndarray:
    """x / ||x||; the zero vector maps to zero (the flagged 'matches nothing' value)."""
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x)
    if n == 0.0:
        return np.zeros_like(x)
    return x / n


def unit_normalize_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized copy plus a mask flagging zero rows."""
    rows = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    out = rows / np.where(zero, 1.0, norms)[:, None]
    out[zero] = 0.0
    return out, zero


@dataclass
class Prototype:
    vector: np.ndarray  # unit norm
    support: int
    exemplar_id: str

    def to_dict(self) -> dict:
        return {"exemplar_id": self.exemplar_id, "support": self.support}


@dataclass
class PrototypeSet:
    prototypes: list[Prototype]
    mean: np.ndarray
    mean_sq_norm: float
    count: int

    def density(self, x: np.ndarray) -> float:
        """Cauchy data density of x under this set's running statistics.

        Defined as 1 when the variance term degenerates (all mass at one point).
        """
        var = self.mean_sq_norm - float(self.mean @ self.mean)
        if var <= _DENSITY_EPS:
            return 1.0
        d2 = float(np.sum((np.asarray(x, dtype=np.float64) - self.mean) ** 2))
        return 1.0 / (1.0 + d2 / var)

    def matrix(self) -> np.ndarray:
        return np.stack([p.vector for p in self.prototypes])


def fit_set(samples: list[tuple[str, np.ndarray]]) -> PrototypeSet:
    """Single sequential pass over (id, unit vector) pairs."""
    if not samples:
        raise ValueError("fit_set needs at least one sample")
    vectors = []
    for sid, vec in samples:
        v = np.asarray(vec, dtype=np.float64)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"sample {sid!r} is not unit-norm")
        vectors.append(v)

    first_id, first = samples[0][0], vectors[0]
    dim = first.shape[0]
    protos = np.empty((len(samples), dim), dtype=np.float64)
    protos[0] = first
    n_protos = 1
    supports = [1]
    exemplars = [first_id]

    mean = first.copy()
    mean_sq = float(first @ first)
    for i in range(1, len(samples)):
        x = vectors[i]
        n = i + 1
        mean = ((n - 1) * mean + x) / n
        mean_sq = ((n - 1) * mean_sq + float(x @ x)) / n
        d2 = np.sum((protos[:n_protos] - x) ** 2, axis=1)
        j = int(np.argmin(d2))
        if d2[j] > MERGE_RADIUS_SQ:
            protos[n_protos] = x
            supports.append(1)
            exemplars.append(samples[i][0])
            n_protos += 1
        else:
            s = supports[j]
            merged = (s * protos[j] + x) / (s + 1)
            norm = np.linalg.norm(merged)
            if norm > 0.0:
                merged /= norm
            protos[j] = merged
            supports[j] = s + 1

    prototypes = [
        Prototype(protos[j].copy(), supports[j], exemplars[j]) for j in range(n_protos)
    ]
    return PrototypeSet(prototypes, mean, mean_sq, len(samples))


@dataclass
class PrototypeModel:
    task: Task
    dim: int
    sets: dict[str, dict[str, PrototypeSet]]  # label -> {positive, negative}
    untrainable: set[str] = field(default_factory=set)
    zero_dropped: int = 0


def fit(matrix: FeatureMatrix, manifest: Manifest, task: Task | None = None) -> PrototypeModel:
    """One binary prototype model (positive vs negative set) per task label."""
    task = task or manifest.task
    ids = manifest.ids()
    missing = [i for i in ids if not matrix.has(i)]
    if missing:
        raise AlignmentError(f"feature matrix missing manifest ids: {missing[:8]}")
    rows = matrix.select(ids).vectors.astype(np.float64)
    normed, zero = unit_normalize_rows(rows)
    labels = manifest.label_matrix()

    sets: dict[str, dict[str, PrototypeSet]] = {}
    untrainable: set[str] = set()
    for j, label in enumerate(task.labels):
        side_sets: dict[str, PrototypeSet] = {}
        for side, wanted in ((POSITIVE, 1), (NEGATIVE, 0)):
            samples = [
                (ids[i], normed[i])
                for i in range(len(ids))
                if labels[i, j] == wanted and not zero[i]
            ]
            if not samples:
                untrainable.add(label)
                continue
            side_sets[side] = fit_set(samples)
        sets[label] = side_sets
    return PrototypeModel(task, matrix.dim, sets, untrainable, zero_dropped=int(zero.sum()))


@dataclass
class XdnnDecision:
    labels: dict[str, int | None]  # None = abstain (untrainable label)
    scores: dict[str, tuple[float, float] | None]  # (lambda_pos, lambda_neg)
    winning_prototype: dict[str, str | None]

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "scores": {
                k: None if v is None else {"positive": v[0], "negative": v[1]}
                for k, v in self.scores.items()
            },
            "winning_prototype": self.winning_prototype,
        }


def _best_score(pset: PrototypeSet, x: np.ndarray) -> tuple[float, str]:
    d2 = np.sum((pset.matrix() - x) ** 2, axis=1)
    j = int(np.argmin(d2))
    return float(np.exp(-d2[j])), pset.prototypes[j].exemplar_id


def classify(model: PrototypeModel, x: np.ndarray) -> XdnnDecision:
    """Local stage: best exp(-||x-p||^2) per set; global stage: winner-takes-all.

    Ties resolve to 0 (conservative default). Inputs are unit-normalized
    defensively; callers should already pass unit vectors.
    """
    x = unit_normalize(np.asarray(x, dtype=np.float64))
    labels: dict[str, int | None] = {}
    scores: dict[str, tuple[float, float] | None] = {}
    winning: dict[str, str | None] = {}
    for label in model.task.labels:
        if label in model.untrainable:
            labels[label] = None
            scores[label] = None
            winning[label] = None
            continue
        lam_pos, ex_pos = _best_score(model.sets[label][POSITIVE], x)
        lam_neg, ex_neg = _best_score(model.sets[label][NEGATIVE], x)
        decided = int(lam_pos > lam_neg)
        labels[label] = decided
        scores[label] = (lam_pos, lam_neg)
        winning[label] = ex_pos if decided else ex_neg
    return XdnnDecision(labels, scores, winning)


def _min_sq_dist(x: np.ndarray, protos: np.ndarray, chunk: int = 512) -> np.ndarray:
    """min_j ||x_i - p_j||^2 per row, computed blockwise via the dot expansion."""
    p_sq = np.sum(protos**2, axis=1)
    out = np.empty(len(x))
    for start in range(0, len(x), chunk):
        block = x[start : start + chunk]
        d2 = np.sum(block**2, axis=1)[:, None] - 2.0 * (block @ protos.T) + p_sq[None, :]
        out[start : start + chunk] = np.maximum(d2, 0.0).min(axis=1)
    return out


def classify_matrix(model: PrototypeModel, rows: np.ndarray) -> np.ndarray:
    """Vectorized decisions for many rows; abstaining labels predict 0."""
    normed, _ = unit_normalize_rows(rows)
    out = np.zeros((len(normed), len(model.task.labels)), dtype=np.int64)
    for j, label in enumerate(model.task.labels):
        if label in model.untrainable:
            continue
        # compare in lambda space so borderline rounding matches classify()
        lam_pos = np.exp(-_min_sq_dist(normed, model.sets[label][POSITIVE].matrix()))
        lam_neg = np.exp(-_min_sq_dist(normed, model.sets[label][NEGATIVE].matrix()))
        out[:, j] = (lam_pos > lam_neg).astype(np.int64)
    return out


@dataclass
class SetReport:
    label: str
    side: str
    prototype_count: int
    sample_count: int
    ratio: float
    top_exemplars: list[tuple[str, int]]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "side": self.side,
            "prototype_count": self.prototype_count,
            "sample_count": self.sample_count,
            "ratio": self.ratio,
            "top_exemplars": [{"exemplar_id": e, "support": s} for e, s in self.top_exemplars],
        }


def prototype_report(model: PrototypeModel, top: int = 5) -> list[SetReport]:
    """Per-set prototype counts and count/sample ratios.

    The ratio tracks the prototype-explosion phenomenon: scattered sets drive
    it toward 1.0 (one prototype per training support).
    """
    reports = []
    for label in model.task.labels:
        for side in (POSITIVE, NEGATIVE):
            pset = model.sets.get(label, {}).get(side)
            if pset is None:
                continue
            ranked = sorted(pset.prototypes, key=lambda p: (-p.support, p.exemplar_id))
            reports.append(
                SetReport(
                    label=label,
                    side=side,
                    prototype_count=len(pset.prototypes),
                    sample_count=pset.count,
                    ratio=len(pset.prototypes) / pset.count,
                    top_exemplars=[(p.exemplar_id, p.support) for p in ranked[:top]],
                )
            )
    return reports


# -- persistence: prototype vectors as MEMF plus a JSON sidecar ------------------


def model_paths(base: str | Path) -> tuple[Path, Path]:
    # append, never with_suffix: base stems may contain dots
    base = Path(base)
    return base.parent / (base.name + ".memf"), base.parent / (base.name + ".json")


def save_model(base: str | Path, model: PrototypeModel) -> None:
    memf_path, sidecar_path = model_paths(base)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    sets_meta: dict[str, dict[str, dict]] = {}
    for label in model.task.labels:
        sets_meta[label] = {}
        for side, pset in model.sets.get(label, {}).items():
            key = f"{label}|{side}"
            for i, proto in enumerate(pset.prototypes):
                ids.append(f"{key}|{i}")
                rows.append(proto.vector.astype(np.float32))
            sets_meta[label][side] = {
                "exemplar_ids": [p.exemplar_id for p in pset.prototypes],
                "supports": [p.support for p in pset.prototypes],
                "mean": pset.mean.tolist(),
                "mean_sq_norm": pset.mean_sq_norm,
                "count": pset.count,
            }
    vectors = np.stack(rows) if rows else np.empty((0, model.dim), dtype=np.float32)
    write_feature_file(memf_path, FeatureMatrix("synthetic", model.dim, ids, vectors))
    sidecar = {
        "task": model.task.name,
        "dim": model.dim,
        "sets": sets_meta,
        "untrainable": sorted(model.untrainable),
        "zero_dropped": model.zero_dropped,
    }
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")


def load_model(base: str | Path) -> PrototypeModel:
    memf_path, sidecar_path = model_paths(base)
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    matrix = read_feature_file(memf_path)
    task = get_task(sidecar["task"])
    sets: dict[str, dict[str, PrototypeSet]] = {}
    for label, sides in sidecar["sets"].items():
        sets[label] = {}
        for side, meta in sides.items():
            protos = []
            for i, (ex, sup) in enumerate(zip(meta["exemplar_ids"], meta["supports"])):
                row_id = f"{label}|{side}|{i}"
                if not matrix.has(row_id):
                    raise IntegrityError(f"{memf_path}: missing prototype row {row_id}")
                protos.append(Prototype(matrix.row(row_id).astype(np.float64), sup, ex))
            sets[label][side] = PrototypeSet(
                protos,
                np.asarray(meta["mean"], dtype=np.float64),
                float(meta["mean_sq_norm"]),
                int(meta["count"]),
            )
    return PrototypeModel(
        task,
        int(sidecar["dim"]),
        sets,
        set(sidecar.get("untrainable", [])),
        int(sidecar.get("zero_dropped", 0)),
    )
