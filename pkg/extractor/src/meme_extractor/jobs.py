"""Extraction jobs: one vector per manifest row, ids preserved in manifest order."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoders import make_encoder
from .manifest import read_manifest
from .memf import write_memf


@dataclass
class ExtractorJob:
    manifest_path: str
    output_path: str
    encoder: str
    batch_size: int = 16
    deterministic: bool = True
    hashed_dim: int = 64


@dataclass
class JobLog:
    encoder: str
    count: int = 0
    dim: int = 0
    warnings: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder,
            "count": self.count,
            "dim": self.dim,
            "warnings": self.warnings,
            "failures": self.failures,
            "ok": self.ok,
        }


def run_job(job: ExtractorJob) -> JobLog:
    """Encode every manifest row and write the MEMF file; fails if any entry fails."""
    rows = read_manifest(job.manifest_path)
    encoder = make_encoder(
        job.encoder, batch_size=job.batch_size, deterministic=job.deterministic, dim=job.hashed_dim
    )
    log = JobLog(encoder=encoder.name)

    if encoder.needs_images:
        missing = [r.id for r in rows if not r.image_path or not Path(r.image_path).is_file()]
        if missing:
            log.failures = [f"{mid}: image file missing" for mid in missing]
            return log
        vectors = encoder.encode_images([r.image_path for r in rows])
    else:
        for r in rows:
            if not r.text.strip():
                log.warnings.append(f"{r.id}: empty text, encoding the empty string")
        vectors = encoder.encode_texts([r.text for r in rows])

    if vectors.shape[0] != len(rows):
        log.failures.append(f"encoder produced {vectors.shape[0]} rows for {len(rows)} entries")
        return log
    log.count = len(rows)
    log.dim = int(vectors.shape[1])
    write_memf(job.output_path, [r.id for r in rows], vectors)
    return log


def write_log(log: JobLog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(log.to_dict(), indent=2, sort_keys=True) + "\n")
