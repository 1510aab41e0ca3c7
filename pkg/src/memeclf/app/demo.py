"""Build a self-contained synthetic project: data files, config, and pipeline runner.

Two feature channels over one manifest: ``syn_strong`` (tight clusters) and
``syn_weak`` (same layout, heavier noise), plus their concatenation. This is
the offline stand-in for the real (encoder features, manifests) inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..feature_store import (
    Manifest,
    SyntheticSpec,
    gen_synthetic,
    save_manifest,
    write_feature_file,
)
from .config import ProjectConfig, load_config
from .pipeline import cmd_eval, cmd_fit_xdnn, cmd_index, cmd_ingest, cmd_train

STRONG = "syn_strong"
WEAK = "syn_weak"
COMBINED = f"{STRONG}+{WEAK}"


@dataclass(frozen=True)
class DemoSettings:
    seed: int = 7
    dim: int = 64
    label_count: int = 2
    clusters_per_label: int = 2
    samples_per_cluster: int = 500
    spread_strong: float = 0.05
    spread_weak: float = 1.2
    epochs: int = 20
    batch_size: int = 32
    k_neighbors: int = 9

    @property
    def task_name(self) -> str:
        return f"synthetic_{self.label_count}"


def _split_of(i: int) -> str:
    # deterministic 70/15/15 round-robin so every cluster feeds every split
    r = i % 20
    if r < 14:
        return "train"
    if r < 17:
        return "dev"
    return "test"


def write_project(root: str | Path, settings: DemoSettings = DemoSettings()) -> Path:
    """Write data files and config.toml under ``root``; returns the config path."""
    root = Path(root)
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)
    (root / "artifacts").mkdir(exist_ok=True)

    spec = SyntheticSpec(
        label_count=settings.label_count,
        clusters_per_label=settings.clusters_per_label,
        dim=settings.dim,
        samples_per_cluster=settings.samples_per_cluster,
        cluster_spread=settings.spread_strong,
        seed=settings.seed,
    )
    strong, manifest = gen_synthetic(spec)
    weak, _ = gen_synthetic(
        SyntheticSpec(
            label_count=spec.label_count,
            clusters_per_label=spec.clusters_per_label,
            dim=spec.dim,
            samples_per_cluster=spec.samples_per_cluster,
            cluster_spread=settings.spread_weak,
            seed=spec.seed,
        )
    )

    by_split: dict[str, list[int]] = {"train": [], "dev": [], "test": []}
    for i in range(len(manifest.entries)):
        by_split[_split_of(i)].append(i)
    for split, idx in by_split.items():
        entries = [manifest.entries[i] for i in idx]
        ids = [e.id for e in entries]
        save_manifest(
            data / f"{settings.task_name}.{split}.jsonl",
            Manifest(entries, manifest.task, split),
        )
        write_feature_file(data / f"{STRONG}.{split}.memf", strong.select(ids, source=STRONG))
        write_feature_file(data / f"{WEAK}.{split}.memf", weak.select(ids, source=WEAK))

    config = root / "config.toml"
    config.write_text(
        "\n".join(
            [
                'data_dir = "data"',
                'artifacts_dir = "artifacts"',
                f'tasks = ["{settings.task_name}"]',
                f'models = ["{STRONG}", "{WEAK}", "{COMBINED}"]',
                f"k_neighbors = {settings.k_neighbors}",
                "threshold = 0.5",
                f"seed = {settings.seed}",
                'listen_address = "127.0.0.1:8808"',
                "",
                "[train]",
                f"epochs = {settings.epochs}",
                f"batch_size = {settings.batch_size}",
                "lr = 1e-4",
                "shuffle = true",
                "",
            ]
        ),
        encoding="utf-8",
    )
    return config


def run_pipeline(config_path: str | Path, evaluate: bool = True) -> ProjectConfig:
    """ingest -> train -> index -> xdnn-fit (-> eval) for every (task, model)."""
    cfg = load_config(config_path)
    result = cmd_ingest(cfg)
    if not result.ok:
        raise RuntimeError("synthetic project failed ingest validation")
    for task in cfg.tasks:
        for model in cfg.models:
            cmd_train(cfg, task, model)
            cmd_index(cfg, task, model)
            cmd_fit_xdnn(cfg, task, model)
            if evaluate:
                cmd_eval(cfg, task, model)
    return cfg
