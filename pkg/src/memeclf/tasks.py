"""Task definitions: label vocabularies and which labels feed each headline metric."""

from __future__ import annotations

import re
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Task:
    """A classification task over a fixed label vocabulary.

    ``labels`` is the full per-entry vocabulary. ``type_labels`` is the subset
    entering the weighted-F1 average (for misogyny type classification the
    four type labels, excluding the top-level misogynous flag by default).
    """

    name: str
    labels: tuple[str, ...]
    type_labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("task needs at least one label")
        if not self.type_labels:
            object.__setattr__(self, "type_labels", self.labels)
        unknown = set(self.type_labels) - set(self.labels)
        if unknown:
            raise ValueError(f"type_labels not in vocabulary: {sorted(unknown)}")


MAMI_A = Task("mami_a", ("misogynous",))

MAMI_B = Task(
    "mami_b",
    ("misogynous", "shaming", "stereotype", "objectification", "violence"),
    type_labels=("shaming", "stereotype", "objectification", "violence"),
)

HATEFUL = Task("hateful", ("hateful",))

_BUILTIN = {t.name: t for t in (MAMI_A, MAMI_B, HATEFUL)}

_SYNTHETIC_RE = re.compile(r"^synthetic_(\d+)$")


def synthetic_task(label_count: int) -> Task:
    """Task for generated data: labels label_0..label_{k-1}."""
    if label_count < 1:
        raise ValueError("label_count must be >= 1")
    return Task(f"synthetic_{label_count}", tuple(f"label_{i}" for i in range(label_count)))


def get_task(name: str) -> Task:
    """Resolve a task by name; synthetic_<k> tasks are generated on the fly."""
    if name in _BUILTIN:
        return _BUILTIN[name]
    m = _SYNTHETIC_RE.match(name)
    if m:
        return synthetic_task(int(m.group(1)))
    raise KeyError(f"unknown task {name!r}")


SPLITS = ("train", "dev", "test")
