"""Minimal reader for the JSON-lines manifest schema (id, text, image_path, labels)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ManifestRow:
    id: str
    text: str
    image_path: str | None


def read_manifest(path: str | Path) -> list[ManifestRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "id" not in obj:
                raise ValueError(f"{path}:{lineno}: row has no id")
            rows.append(
                ManifestRow(
                    id=str(obj["id"]),
                    text=str(obj.get("text") or ""),
                    image_path=obj.get("image_path"),
                )
            )
    ids = [r.id for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate meme ids")
    return rows
