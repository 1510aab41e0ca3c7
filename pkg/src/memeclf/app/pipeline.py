"""Pipeline steps tying the stores together: ingest -> train -> index -> prototypes -> eval,
plus the explanation assembly shared by the CLI and the HTTP service."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import mlp_head, retrieval, xdnn
from ..errors import DependencyError
from ..feature_store import (
    MAMI_TEST_STATS,
    MAMI_TRAIN_STATS,
    FeatureMatrix,
    Manifest,
    StatTable,
    concat_features,
    load_manifest,
    read_feature_file,
    save_manifest,
    validate_manifest,
    write_feature_file,
)
from ..metrics import EvalReport, compare_report, evaluate_predictions
from ..tasks import SPLITS, get_task
from .config import ProjectConfig


def ext(base: Path, suffix: str) -> Path:
    """Append an extension; with_suffix would clobber dotted artifact stems."""
    return base.parent / (base.name + suffix)


def model_tag(model: str, task: str) -> str:
    return f"{model}/{task}"


# -- artifact layout ----------------------------------------------------------


def manifest_path(cfg: ProjectConfig, task: str, split: str) -> Path:
    return cfg.artifacts_dir / "manifests" / f"{task}.{split}.jsonl"


def features_base(cfg: ProjectConfig, task: str, model: str, split: str) -> Path:
    return cfg.artifacts_dir / "features" / f"{task}.{model}.{split}"


def head_path(cfg: ProjectConfig, task: str, model: str) -> Path:
    return cfg.artifacts_dir / "heads" / f"{task}.{model}.memh"


def history_path(cfg: ProjectConfig, task: str, model: str) -> Path:
    return cfg.artifacts_dir / "heads" / f"{task}.{model}.history.jsonl"


def index_base(cfg: ProjectConfig, task: str, model: str) -> Path:
    return cfg.artifacts_dir / "index" / f"{task}.{model}"


def prototypes_base(cfg: ProjectConfig, task: str, model: str) -> Path:
    return cfg.artifacts_dir / "prototypes" / f"{task}.{model}"


def eval_path(cfg: ProjectConfig, task: str, model: str, method: str) -> Path:
    return cfg.artifacts_dir / "eval" / f"{task}.{model}.{method}.json"


def decisions_path(cfg: ProjectConfig) -> Path:
    return cfg.artifacts_dir / "decisions.log"


def _crc(path: Path) -> str:
    return f"crc32:{zlib.crc32(path.read_bytes()) & 0xFFFFFFFF:08x}"


# -- data-dir inputs ----------------------------------------------------------


def _input_manifest(cfg: ProjectConfig, task: str, split: str) -> Path:
    return cfg.data_dir / f"{task}.{split}.jsonl"


def _input_memf(cfg: ProjectConfig, source: str, split: str) -> Path:
    return cfg.data_dir / f"{source}.{split}.memf"


def load_input_matrix(cfg: ProjectConfig, model: str, split: str) -> FeatureMatrix:
    """Read a base source file, or build a '+'-joined concatenation of base sources."""
    parts = model.split("+")
    matrices = []
    for part in parts:
        path = _input_memf(cfg, part, split)
        if not path.is_file():
            raise DependencyError(f"missing feature file for model {part!r}: {path}")
        matrices.append(read_feature_file(path, source=part))
    merged = matrices[0]
    for other in matrices[1:]:
        merged = concat_features(merged, other)
    return merged


def expected_stats_for(task_name: str, labels: tuple[str, ...], split: str) -> StatTable | None:
    """Published reference counts for the MAMI splits, filtered to the task vocabulary."""
    if task_name not in ("mami_a", "mami_b"):
        return None
    table = {"train": MAMI_TRAIN_STATS, "test": MAMI_TEST_STATS}.get(split)
    if table is None:
        return None
    return StatTable(table.total, {k: v for k, v in table.positives.items() if k in labels})


# -- pipeline steps -----------------------------------------------------------


@dataclass
class IngestResult:
    reports: list[dict]
    ok: bool


def cmd_ingest(cfg: ProjectConfig) -> IngestResult:
    """Validate manifests and feature files, writing canonical stores to artifacts_dir."""
    reports: list[dict] = []
    ok = True
    for task_name in cfg.tasks:
        task = get_task(task_name)
        manifests: dict[str, Manifest] = {}
        for split in SPLITS:
            src = _input_manifest(cfg, task_name, split)
            if not src.is_file():
                if split == "train":
                    raise DependencyError(f"missing train manifest: {src}")
                continue
            manifests[split] = load_manifest(src, task, split)

        for split, manifest in manifests.items():
            expected = (
                expected_stats_for(task_name, task.labels, split)
                if cfg.check_reference_stats
                else None
            )
            report = validate_manifest(manifest, expected)
            reports.append(report.to_dict())
            if not report.ok:
                ok = False
                continue
            out = manifest_path(cfg, task_name, split)
            out.parent.mkdir(parents=True, exist_ok=True)
            save_manifest(out, manifest)

            for model in cfg.models:
                matrix = load_input_matrix(cfg, model, split)
                canonical = matrix.select(manifest.ids())
                base = features_base(cfg, task_name, model, split)
                base.parent.mkdir(parents=True, exist_ok=True)
                memf = ext(base, ".memf")
                write_feature_file(memf, canonical)
                sidecar = {
                    "source": canonical.source,
                    "model": model,
                    "dim": canonical.dim,
                    "count": canonical.count,
                    "checksum": _crc(memf),
                }
                ext(base, ".json").write_text(
                    json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8"
                )
    report_path = cfg.artifacts_dir / "ingest_report.json"
    report_path.write_text(json.dumps({"ok": ok, "reports": reports}, sort_keys=True) + "\n")
    return IngestResult(reports, ok)


def load_artifact_manifest(cfg: ProjectConfig, task: str, split: str) -> Manifest:
    path = manifest_path(cfg, task, split)
    if not path.is_file():
        raise DependencyError(f"missing {path}; run `memeclf ingest` first")
    return load_manifest(path, get_task(task), split)


def load_artifact_matrix(cfg: ProjectConfig, task: str, model: str, split: str) -> FeatureMatrix:
    base = features_base(cfg, task, model, split)
    memf = ext(base, ".memf")
    if not memf.is_file():
        raise DependencyError(f"missing {memf}; run `memeclf ingest` first")
    sidecar = json.loads(ext(base, ".json").read_text(encoding="utf-8"))
    return read_feature_file(memf, source=sidecar.get("source", "synthetic"))


def _artifact_splits(cfg: ProjectConfig, task: str) -> list[str]:
    return [s for s in SPLITS if manifest_path(cfg, task, s).is_file()]


def cmd_train(cfg: ProjectConfig, task: str, model: str, seed: int | None = None) -> Path:
    """Train the classification head and persist checkpoint + history."""
    manifest = load_artifact_manifest(cfg, task, "train")
    matrix = load_artifact_matrix(cfg, task, model, "train")
    dev = None
    if "dev" in _artifact_splits(cfg, task):
        dev = (load_artifact_matrix(cfg, task, model, "dev"), load_artifact_manifest(cfg, task, "dev"))
    train_cfg = mlp_head.TrainConfig(
        epochs=cfg.train.epochs,
        batch_size=cfg.train.batch_size,
        lr=cfg.train.lr,
        threshold=cfg.threshold,
        seed=cfg.seed if seed is None else seed,
        shuffle=cfg.train.shuffle,
    )
    head, history = mlp_head.train(matrix, manifest, train_cfg, dev=dev)
    out = head_path(cfg, task, model)
    out.parent.mkdir(parents=True, exist_ok=True)
    mlp_head.save_checkpoint(out, head)
    mlp_head.save_history(history_path(cfg, task, model), history)
    return out


def cmd_index(cfg: ProjectConfig, task: str, model: str) -> Path:
    """Embed the train split through the trained head and persist the cosine index."""
    ckpt = head_path(cfg, task, model)
    if not ckpt.is_file():
        raise DependencyError(f"missing {ckpt}; run `memeclf train` first")
    head = mlp_head.load_checkpoint(ckpt)
    manifest = load_artifact_manifest(cfg, task, "train")
    matrix = load_artifact_matrix(cfg, task, model, "train")
    x, _ = mlp_head.align_features(matrix, manifest)
    embeddings = mlp_head.embed(head, x).astype(np.float32)
    index = retrieval.build_index(manifest.ids(), embeddings, model_tag(model, task))
    base = index_base(cfg, task, model)
    base.parent.mkdir(parents=True, exist_ok=True)
    retrieval.save_index(base, index)
    return ext(base, ".memf")


def cmd_fit_xdnn(cfg: ProjectConfig, task: str, model: str) -> Path:
    """Fit class-wise prototype sets on the raw pretrained features."""
    manifest = load_artifact_manifest(cfg, task, "train")
    matrix = load_artifact_matrix(cfg, task, model, "train")
    model_obj = xdnn.fit(matrix, manifest)
    base = prototypes_base(cfg, task, model)
    base.parent.mkdir(parents=True, exist_ok=True)
    xdnn.save_model(base, model_obj)
    return ext(base, ".memf")


def cmd_eval(
    cfg: ProjectConfig, task: str, model: str, split: str | None = None
) -> list[EvalReport]:
    """Score both explanation methods on the held-out split and refresh the comparison table."""
    splits = _artifact_splits(cfg, task)
    if split is None:
        split = "test" if "test" in splits else "dev" if "dev" in splits else None
    if split is None:
        raise DependencyError(f"no dev or test split ingested for task {task!r}")
    manifest = load_artifact_manifest(cfg, task, split)
    matrix = load_artifact_matrix(cfg, task, model, split)
    x, y = mlp_head.align_features(matrix, manifest)
    task_obj = get_task(task)

    reports = []
    ckpt = head_path(cfg, task, model)
    if not ckpt.is_file():
        raise DependencyError(f"missing {ckpt}; run `memeclf train` first")
    head = mlp_head.load_checkpoint(ckpt)
    pred_labels, _ = mlp_head.predict(head, x, threshold=cfg.threshold)
    reports.append(
        evaluate_predictions(y, pred_labels, task_obj, f"example_based/{model_tag(model, task)}")
    )

    proto_base = prototypes_base(cfg, task, model)
    if not ext(proto_base, ".json").is_file():
        raise DependencyError(f"missing {proto_base}; run `memeclf xdnn-fit` first")
    proto_model = xdnn.load_model(proto_base)
    xdnn_pred = xdnn.classify_matrix(proto_model, x)
    reports.append(
        evaluate_predictions(y, xdnn_pred, task_obj, f"prototype_based/{model_tag(model, task)}")
    )

    eval_dir = cfg.artifacts_dir / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    for report, method in zip(reports, ("example_based", "prototype_based")):
        eval_path(cfg, task, model, method).write_text(
            json.dumps(report.to_dict(), sort_keys=True) + "\n", encoding="utf-8"
        )

    all_reports = []
    for path in sorted(eval_dir.glob(f"{task}.*.json")):
        if path.name.startswith(f"{task}.comparison"):
            continue
        all_reports.append(EvalReport.from_dict(json.loads(path.read_text(encoding="utf-8"))))
    table = compare_report(all_reports)
    (eval_dir / f"{task}.comparison.json").write_text(table.to_json() + "\n", encoding="utf-8")
    (eval_dir / f"{task}.comparison.txt").write_text(table.to_text() + "\n", encoding="utf-8")
    return reports


# -- explanation assembly -------------------------------------------------------


class ExplanationBundle:
    """Immutable artifact bundle answering explain/prototype queries.

    Everything is loaded once from disk; the service adds no hidden state, so
    any served payload is reconstructible offline from the same artifacts.
    """

    def __init__(self, cfg: ProjectConfig):
        self.cfg = cfg
        self.manifests: dict[str, dict[str, Manifest]] = {}
        self.entries: dict[str, dict[str, tuple[str, object]]] = {}
        self.heads: dict[tuple[str, str], mlp_head.MlpHead] = {}
        self.indexes: dict[tuple[str, str], retrieval.EmbeddingIndex] = {}
        self.protos: dict[tuple[str, str], xdnn.PrototypeModel] = {}
        self.features: dict[tuple[str, str, str], FeatureMatrix] = {}

        for task in cfg.tasks:
            splits = _artifact_splits(cfg, task)
            if not splits:
                continue
            self.manifests[task] = {s: load_artifact_manifest(cfg, task, s) for s in splits}
            self.entries[task] = {}
            for split in splits:
                for entry in self.manifests[task][split].entries:
                    self.entries[task].setdefault(entry.id, (split, entry))
            for model in cfg.models:
                key = (task, model)
                ckpt = head_path(cfg, task, model)
                idx = index_base(cfg, task, model)
                if ckpt.is_file():
                    self.heads[key] = mlp_head.load_checkpoint(ckpt)
                if ext(idx, ".json").is_file():
                    self.indexes[key] = retrieval.load_index(idx)
                pb = prototypes_base(cfg, task, model)
                if ext(pb, ".json").is_file():
                    self.protos[key] = xdnn.load_model(pb)
                for split in splits:
                    base = features_base(cfg, task, model, split)
                    if ext(base, ".memf").is_file():
                        self.features[(task, model, split)] = load_artifact_matrix(
                            cfg, task, model, split
                        )

    def pairs(self) -> list[tuple[str, str]]:
        """(task, model) pairs with at least a trained head and an index."""
        return sorted(k for k in self.heads if k in self.indexes)

    def models_payload(self) -> list[dict]:
        out = []
        for task, model in self.pairs():
            checksums = {}
            ckpt = head_path(self.cfg, task, model)
            if ckpt.is_file():
                checksums["head"] = _crc(ckpt)
            idx = ext(index_base(self.cfg, task, model), ".memf")
            if idx.is_file():
                checksums["index"] = _crc(idx)
            pb = ext(prototypes_base(self.cfg, task, model), ".memf")
            if pb.is_file():
                checksums["prototypes"] = _crc(pb)
            out.append(
                {
                    "task": task,
                    "model": model,
                    "model_tag": model_tag(model, task),
                    "checksums": checksums,
                }
            )
        return out

    def find_meme(self, meme_id: str, task: str | None = None) -> tuple[str, str, object] | None:
        """(task, split, entry) for a known meme id."""
        tasks = [task] if task else list(self.entries)
        for t in tasks:
            hit = self.entries.get(t, {}).get(meme_id)
            if hit:
                return t, hit[0], hit[1]
        return None

    def _query_vector(self, task: str, model: str, split: str, meme_id: str) -> np.ndarray:
        matrix = self.features.get((task, model, split))
        if matrix is None or not matrix.has(meme_id):
            raise DependencyError(f"no features for meme {meme_id!r} under model {model!r}")
        return matrix.row(meme_id).astype(np.float64)

    def explain(
        self,
        meme_id: str,
        task: str,
        models: list[str] | None = None,
        k: int | None = None,
    ) -> dict:
        """Per-model predictions, nearest training cases and prototype decisions."""
        found = self.find_meme(meme_id, task)
        if found is None:
            raise KeyError(f"unknown meme id {meme_id!r} for task {task!r}")
        _, split, entry = found
        models = models or [m for t, m in self.pairs() if t == task]
        k = k or self.cfg.k_neighbors
        train_entries = self.manifests[task]["train"].by_id()

        payload_models: dict[str, dict] = {}
        for model in models:
            key = (task, model)
            if key not in self.heads or key not in self.indexes:
                raise DependencyError(f"no artifacts for model {model!r} on task {task!r}")
            head = self.heads[key]
            x = self._query_vector(task, model, split, meme_id)
            labels, probs = mlp_head.predict(head, x, threshold=self.cfg.threshold)
            neighbors = retrieval.query_top_k(self.indexes[key], mlp_head.embed(head, x), k)
            for n in neighbors:
                ref = train_entries.get(n.id)
                n.labels = dict(ref.labels) if ref is not None else None
            task_labels = self.manifests[task]["train"].task.labels
            model_payload = {
                "model_tag": model_tag(model, task),
                "probs": {name: float(probs[j]) for j, name in enumerate(task_labels)},
                "labels": {name: int(labels[j]) for j, name in enumerate(task_labels)},
                "neighbors": [n.to_dict() for n in neighbors],
            }
            if key in self.protos:
                decision = xdnn.classify(self.protos[key], x)
                model_payload["xdnn"] = decision.to_dict()
            payload_models[model] = model_payload

        return {
            "meme_id": meme_id,
            "task": task,
            "split": split,
            "k": k,
            "entry": {
                "id": entry.id,
                "text": entry.text,
                "image_path": entry.image_path,
                "labels": entry.labels,
            },
            "models": payload_models,
        }

    def prototypes_payload(self, task: str, model: str, label: str | None = None) -> list[dict]:
        key = (task, model)
        if key not in self.protos:
            raise DependencyError(f"no prototype artifacts for {model!r} on {task!r}")
        reports = xdnn.prototype_report(self.protos[key])
        if label is not None:
            reports = [r for r in reports if r.label == label]
        return [r.to_dict() for r in reports]
