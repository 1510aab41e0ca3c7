"""Dataset manifests, the MEMF feature-vector file format, concatenation and synthetic data.

MEMF layout (little-endian, bit-exact):
    bytes 0-3    magic ``MEMF``
    bytes 4-5    version u16 (currently 1)
    bytes 6-7    flags u16 (must be 0)
    bytes 8-11   dim u32
    bytes 12-19  count u64
    then ``count`` records: id_len u16, id UTF-8 bytes, dim * f32
    finally CRC32 (u32) over every preceding byte

Manifests are UTF-8 JSON lines with keys ``id``, ``text``, ``image_path``
(nullable) and ``labels`` (object of label -> 0/1).
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, CorruptionError, FormatError, IntegrityError
from .tasks import Task, synthetic_task

MEMF_MAGIC = b"MEMF"
MEMF_VERSION = 1
_HEADER = struct.Struct("<4sHHIQ")

# Canonical feature sources. `source` is a free short string so that several
# synthetic channels can coexist; these five are the named ones.
SOURCE_BERT_BASE = "bert_base"
SOURCE_BERTWEET = "bertweet"
SOURCE_CLIP = "clip"
SOURCE_CLIP_BERTWEET = "clip_bertweet"
SOURCE_SYNTHETIC = "synthetic"


@dataclass
class MemeEntry:
    """One dataset row: a meme id, its transcription and its label values."""

    id: str
    text: str = ""
    image_path: str | None = None
    labels: dict[str, int] = field(default_factory=dict)


@dataclass
class Manifest:
    entries: list[MemeEntry]
    task: Task
    split: str

    def __post_init__(self) -> None:
        if not self.split:
            raise ValueError("split name must be nonempty")

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def by_id(self) -> dict[str, MemeEntry]:
        return {e.id: e for e in self.entries}

    def label_matrix(self) -> np.ndarray:
        """(n, label_count) int array in task label order; missing keys raise."""
        out = np.zeros((len(self.entries), len(self.task.labels)), dtype=np.int64)
        for i, e in enumerate(self.entries):
            for j, name in enumerate(self.task.labels):
                if name not in e.labels:
                    raise KeyError(f"entry {e.id!r} missing label {name!r}")
                out[i, j] = e.labels[name]
        return out


@dataclass
class FeatureMatrix:
    """Aligned (meme-id, dense vector) table for one feature source."""

    source: str
    dim: int
    ids: list[str]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if self.dim < 0:
            raise ValueError("dim must be >= 0")
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.shape != (len(self.ids), self.dim):
            raise ValueError(
                f"vectors shape {self.vectors.shape} != ({len(self.ids)}, {self.dim})"
            )
        if len(set(self.ids)) != len(self.ids):
            raise IntegrityError("feature ids are not unique")
        if any(not i for i in self.ids):
            raise ValueError("feature ids must be nonempty")
        if self.vectors.size and not np.all(np.isfinite(self.vectors)):
            raise ValueError("feature vectors must be finite (no NaN/Inf)")
        self._row_of = {mid: i for i, mid in enumerate(self.ids)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.source == other.source
            and self.dim == other.dim
            and self.ids == other.ids
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )

    @property
    def count(self) -> int:
        return len(self.ids)

    def row(self, meme_id: str) -> np.ndarray:
        return self.vectors[self._row_of[meme_id]]

    def has(self, meme_id: str) -> bool:
        return meme_id in self._row_of

    def select(self, ids: list[str], source: str | None = None) -> "FeatureMatrix":
        """Rows for ``ids`` in that order; ids absent here raise AlignmentError."""
        missing = [i for i in ids if i not in self._row_of]
        if missing:
            raise AlignmentError(f"feature matrix missing ids: {_preview(missing)}")
        idx = [self._row_of[i] for i in ids]
        return FeatureMatrix(source or self.source, self.dim, list(ids), self.vectors[idx])


def write_feature_file(path: str | Path, matrix: FeatureMatrix) -> None:
    """Emit the bit-exact MEMF layout; rewriting the same matrix is byte-identical."""
    buf = bytearray()
    buf += _HEADER.pack(MEMF_MAGIC, MEMF_VERSION, 0, matrix.dim, matrix.count)
    for i, mid in enumerate(matrix.ids):
        raw_id = mid.encode("utf-8")
        if len(raw_id) > 0xFFFF:
            raise ValueError(f"id too long for format: {mid[:32]!r}...")
        buf += struct.pack("<H", len(raw_id))
        buf += raw_id
        buf += matrix.vectors[i].tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


def read_feature_file(path: str | Path, source: str = SOURCE_SYNTHETIC) -> FeatureMatrix:
    """Read a MEMF file. The layout carries no source name, so the caller supplies one."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + 4:
        raise CorruptionError(f"{path}: file shorter than header + checksum")
    magic, version, flags, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MEMF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != MEMF_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if flags != 0:
        raise FormatError(f"{path}: unsupported flags {flags:#x}")

    body, trailer = data[:-4], data[-4:]
    (stored_crc,) = struct.unpack("<I", trailer)
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CorruptionError(f"{path}: CRC mismatch")

    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    off = _HEADER.size
    end = len(body)
    for i in range(count):
        if off + 2 > end:
            raise CorruptionError(f"{path}: truncated at record {i} (header says {count})")
        (id_len,) = struct.unpack_from("<H", body, off)
        off += 2
        if off + id_len + 4 * dim > end:
            raise CorruptionError(f"{path}: truncated at record {i} (header says {count})")
        ids.append(body[off : off + id_len].decode("utf-8"))
        off += id_len
        vectors[i] = np.frombuffer(body, dtype="<f4", count=dim, offset=off)
        off += 4 * dim
    if off != end:
        raise CorruptionError(f"{path}: {end - off} trailing bytes after {count} records")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise IntegrityError(f"{path}: duplicate ids {_preview(dupes)}")
    return FeatureMatrix(source, dim, ids, vectors)


def concat_features(a: FeatureMatrix, b: FeatureMatrix) -> FeatureMatrix:
    """Row-wise concatenation aligned by id; row order follows ``a``."""
    a_ids, b_ids = set(a.ids), set(b.ids)
    if a_ids != b_ids:
        msgs = []
        only_a = sorted(a_ids - b_ids)
        only_b = sorted(b_ids - a_ids)
        if only_a:
            msgs.append(f"missing from second: {_preview(only_a)}")
        if only_b:
            msgs.append(f"missing from first: {_preview(only_b)}")
        raise AlignmentError("; ".join(msgs))
    b_aligned = b.select(a.ids)
    if {a.source, b.source} == {SOURCE_CLIP, SOURCE_BERTWEET}:
        source = SOURCE_CLIP_BERTWEET
    else:
        source = SOURCE_SYNTHETIC
    merged = np.concatenate([a.vectors, b_aligned.vectors], axis=1)
    return FeatureMatrix(source, a.dim + b.dim, list(a.ids), merged)


# -- manifests --------------------------------------------------------------


def save_manifest(path: str | Path, manifest: Manifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            fh.write(
                json.dumps(
                    {"id": e.id, "text": e.text, "image_path": e.image_path, "labels": e.labels},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def load_manifest(path: str | Path, task: Task, split: str) -> Manifest:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            entries.append(
                MemeEntry(
                    id=str(row["id"]),
                    text=str(row.get("text") or ""),
                    image_path=row.get("image_path"),
                    labels={str(k): int(v) for k, v in (row.get("labels") or {}).items()},
                )
            )
    return Manifest(entries, task, split)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class StatTable:
    """Expected dataset statistics: total rows and per-label positive counts."""

    total: int
    positives: dict[str, int]


# Published MAMI dataset characteristics, used to cross-check ingested manifests.
MAMI_TRAIN_STATS = StatTable(
    total=10_000,
    positives={
        "misogynous": 5_000,
        "shaming": 1_274,
        "stereotype": 2_810,
        "objectification": 2_202,
        "violence": 953,
    },
)
MAMI_TEST_STATS = StatTable(
    total=1_000,
    positives={
        "misogynous": 500,
        "shaming": 146,
        "stereotype": 350,
        "objectification": 348,
        "violence": 153,
    },
)


@dataclass
class Finding:
    severity: str  # "error" | "warning"
    message: str


@dataclass
class ValidationReport:
    task: str
    split: str
    total: int
    positives: dict[str, int]
    findings: list[Finding]

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "split": self.split,
            "total": self.total,
            "positives": self.positives,
            "findings": [{"severity": f.severity, "message": f.message} for f in self.findings],
            "ok": self.ok,
        }


def validate_manifest(manifest: Manifest, expected: StatTable | None = None) -> ValidationReport:
    """Count per-label positives and collect duplicate/missing-label findings."""
    findings: list[Finding] = []
    vocab = set(manifest.task.labels)
    positives = {name: 0 for name in manifest.task.labels}

    seen: set[str] = set()
    for e in manifest.entries:
        if not e.id or any(c.isspace() for c in e.id):
            findings.append(Finding("error", f"bad id {e.id!r} (empty or contains whitespace)"))
        if e.id in seen:
            findings.append(Finding("error", f"duplicate id {e.id!r}"))
        seen.add(e.id)
        missing = vocab - set(e.labels)
        if missing:
            findings.append(Finding("error", f"entry {e.id!r} missing labels {sorted(missing)}"))
        extra = set(e.labels) - vocab
        if extra:
            findings.append(Finding("error", f"entry {e.id!r} has unknown labels {sorted(extra)}"))
        for name, value in e.labels.items():
            if value not in (0, 1):
                findings.append(Finding("error", f"entry {e.id!r} label {name!r} value {value!r}"))
            elif name in positives:
                positives[name] += value

    total = len(manifest.entries)
    if total == 0:
        findings.append(Finding("warning", "empty split"))

    if expected is not None:
        if total != expected.total:
            findings.append(Finding("error", f"total {total} != expected {expected.total}"))
        for name, want in expected.positives.items():
            got = positives.get(name)
            if got != want:
                findings.append(Finding("error", f"label {name!r} positives {got} != expected {want}"))

    return ValidationReport(manifest.task.name, manifest.split, total, positives, findings)


# -- synthetic data ----------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-blob generator settings for offline testing."""

    label_count: int
    clusters_per_label: int
    dim: int
    samples_per_cluster: int
    cluster_spread: float
    seed: int

    def __post_init__(self) -> None:
        if min(self.label_count, self.clusters_per_label, self.samples_per_cluster) < 1:
            raise ValueError("all counts must be >= 1")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.cluster_spread < 0:
            raise ValueError("cluster_spread must be >= 0")


def gen_synthetic(spec: SyntheticSpec) -> tuple[FeatureMatrix, Manifest]:
    """Deterministic blobs around unit-norm centers; labels assigned by generating cluster.

    The rng draws (centers, then unit noise) do not depend on ``cluster_spread``,
    so two specs differing only in spread yield id-aligned channels with the
    same cluster layout at different noise levels.
    """
    task = synthetic_task(spec.label_count)
    rng = np.random.default_rng(spec.seed)
    rows: list[np.ndarray] = []
    entries: list[MemeEntry] = []
    n = 0
    for li, label in enumerate(task.labels):
        for _ in range(spec.clusters_per_label):
            center = rng.standard_normal(spec.dim)
            center /= np.linalg.norm(center)
            noise = rng.standard_normal((spec.samples_per_cluster, spec.dim))
            rows.append(center + spec.cluster_spread * noise)
            for _ in range(spec.samples_per_cluster):
                labels = {name: int(j == li) for j, name in enumerate(task.labels)}
                entries.append(MemeEntry(id=f"syn-{n}", text=f"synthetic meme {n}", labels=labels))
                n += 1
    vectors = np.vstack(rows).astype(np.float32)
    matrix = FeatureMatrix(SOURCE_SYNTHETIC, spec.dim, [e.id for e in entries], vectors)
    return matrix, Manifest(entries, task, "train")


def _preview(items: list[str], limit: int = 8) -> str:
    head = ", ".join(repr(i) for i in items[:limit])
    more = len(items) - limit
    return f"[{head}]" if more <= 0 else f"[{head}, ... +{more} more]"
