"""Dense ReLU classification head (L1/L2/L3 + sigmoid prediction layer).

Trained with binary cross-entropy and Adam; the L3 hidden state doubles as the
embedding used for similarity search. All math is float64 numpy; checkpoints
store parameters as f32 per the MEMH layout.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import AlignmentError, CorruptionError, FormatError, ShapeError
from .feature_store import FeatureMatrix, Manifest

STANDARD_HIDDEN = (512, 256, 128)
PROB_CLAMP = 1e-7

MEMH_MAGIC = b"MEMH"
MEMH_VERSION = 1

_PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3", "wp", "bp")


@dataclass
class MlpHead:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    wp: np.ndarray
    bp: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def label_count(self) -> int:
        return self.wp.shape[1]

    @property
    def hidden_dims(self) -> tuple[int, int, int]:
        return (self.w1.shape[1], self.w2.shape[1], self.w3.shape[1])

    def params(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in _PARAM_ORDER]

    def copy(self) -> "MlpHead":
        return MlpHead(**{name: arr.copy() for name, arr in self.params()})


@dataclass
class Gradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    wp: np.ndarray
    bp: np.ndarray

    def params(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in _PARAM_ORDER]


@dataclass
class ForwardTrace:
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    probs: np.ndarray


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-4
    threshold: float = 0.5
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class HistoryEntry:
    epoch: int
    loss: float
    dev_macro_f1: float | None = None


def init_head(
    input_dim: int,
    label_count: int,
    seed: int,
    hidden: tuple[int, int, int] = STANDARD_HIDDEN,
) -> MlpHead:
    """Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases, seeded."""
    if input_dim < 1 or label_count < 1:
        raise ValueError("input_dim and label_count must be >= 1")
    if len(hidden) != 3 or min(hidden) < 1:
        raise ValueError("hidden must be three positive layer widths")
    rng = np.random.default_rng(seed)
    dims = (input_dim, *hidden, label_count)
    fields = {}
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:]), start=1):
        key = "p" if i == 4 else str(i)
        lim = np.sqrt(6.0 / fan_in)
        fields[f"w{key}"] = rng.uniform(-lim, lim, size=(fan_in, fan_out))
        fields[f"b{key}"] = np.zeros(fan_out)
    return MlpHead(**fields)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(head: MlpHead, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != head.input_dim:
        raise ShapeError(f"batch width {x.shape[-1]} != input_dim {head.input_dim}")
    return x, single


def forward(head: MlpHead, batch: np.ndarray) -> ForwardTrace:
    x, _ = _as_batch(head, batch)
    h1 = np.maximum(x @ head.w1 + head.b1, 0.0)
    h2 = np.maximum(h1 @ head.w2 + head.b2, 0.0)
    h3 = np.maximum(h2 @ head.w3 + head.b3, 0.0)
    probs = _sigmoid(h3 @ head.wp + head.bp)
    return ForwardTrace(h1, h2, h3, probs)


def bce_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeError(f"probs shape {probs.shape} != targets shape {targets.shape}")
    p = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)))


def backward(head: MlpHead, trace: ForwardTrace, batch: np.ndarray, targets: np.ndarray) -> Gradients:
    """Analytic gradients of bce_loss; the ReLU subgradient at 0 is 0."""
    x, _ = _as_batch(head, batch)
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape != trace.probs.shape:
        raise ShapeError(f"targets shape {y.shape} != probs shape {trace.probs.shape}")
    n, label_count = y.shape
    dzp = (trace.probs - y) / (n * label_count)
    gwp = trace.h3.T @ dzp
    gbp = dzp.sum(axis=0)
    dh3 = dzp @ head.wp.T
    dz3 = dh3 * (trace.h3 > 0)
    gw3 = trace.h2.T @ dz3
    gb3 = dz3.sum(axis=0)
    dh2 = dz3 @ head.w3.T
    dz2 = dh2 * (trace.h2 > 0)
    gw2 = trace.h1.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh1 = dz2 @ head.w2.T
    dz1 = dh1 * (trace.h1 > 0)
    gw1 = x.T @ dz1
    gb1 = dz1.sum(axis=0)
    return Gradients(gw1, gb1, gw2, gb2, gw3, gb3, gwp, gbp)


def init_adam(head: MlpHead, lr: float = 1e-4) -> AdamState:
    zeros = {name: np.zeros_like(arr) for name, arr in head.params()}
    return AdamState(step=0, m=zeros, v={k: v.copy() for k, v in zeros.items()}, lr=lr)


def adam_step(head: MlpHead, state: AdamState, grads: Gradients) -> tuple[MlpHead, AdamState]:
    """One bias-corrected Adam update; returns new head and state."""
    step = state.step + 1
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for (name, p), (_, g) in zip(head.params(), grads.params()):
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**step)
        v_hat = v / (1.0 - state.beta2**step)
        new_params[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    return MlpHead(**new_params), replace(state, step=step, m=new_m, v=new_v)


def predict(head: MlpHead, x: np.ndarray, threshold: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Per-label decisions (prob >= threshold) and the probabilities themselves."""
    batch, single = _as_batch(head, x)
    probs = forward(head, batch).probs
    labels = (probs >= threshold).astype(np.int64)
    if single:
        return labels[0], probs[0]
    return labels, probs


def embed(head: MlpHead, x: np.ndarray) -> np.ndarray:
    """The L3 hidden state used as the retrieval embedding."""
    batch, single = _as_batch(head, x)
    h3 = forward(head, batch).h3
    return h3[0] if single else h3


def align_features(matrix: FeatureMatrix, manifest: Manifest) -> tuple[np.ndarray, np.ndarray]:
    """(X float64, Y int) in manifest order; missing feature rows raise AlignmentError."""
    selected = matrix.select(manifest.ids())
    return selected.vectors.astype(np.float64), manifest.label_matrix()


def train(
    matrix: FeatureMatrix,
    manifest: Manifest,
    cfg: TrainConfig,
    dev: tuple[FeatureMatrix, Manifest] | None = None,
    hidden: tuple[int, int, int] = STANDARD_HIDDEN,
) -> tuple[MlpHead, list[HistoryEntry]]:
    """Seeded minibatch training loop.

    When a dev split is supplied the returned head is the one from the best
    dev-macro-F1 epoch (earliest on ties); otherwise the final head.
    """
    from .metrics import task_macro_f1

    x, y = align_features(matrix, manifest)
    if len(x) == 0:
        raise ValueError("cannot train on an empty split")
    head = init_head(matrix.dim, len(manifest.task.labels), cfg.seed, hidden=hidden)
    state = init_adam(head, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)

    dev_xy = None
    if dev is not None:
        dev_xy = align_features(dev[0], dev[1])

    history: list[HistoryEntry] = []
    best: tuple[float, MlpHead] | None = None
    n = len(x)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            trace = forward(head, xb)
            losses.append(bce_loss(trace.probs, yb))
            grads = backward(head, trace, xb, yb)
            head, state = adam_step(head, state, grads)
        entry = HistoryEntry(epoch=epoch, loss=float(np.mean(losses)))
        if dev_xy is not None:
            pred = (forward(head, dev_xy[0]).probs >= cfg.threshold).astype(np.int64)
            entry.dev_macro_f1 = task_macro_f1(dev_xy[1], pred)
            if best is None or entry.dev_macro_f1 > best[0]:
                best = (entry.dev_macro_f1, head.copy())
        history.append(entry)
    final = best[1] if best is not None else head
    return final, history


# -- persistence ---------------------------------------------------------------


def save_checkpoint(path: str | Path, head: MlpHead) -> None:
    """MEMH layout: magic, version u16, input_dim u32, label_count u32, params f32, CRC32.

    Hidden widths are not part of the layout, so only standard 512/256/128
    heads are persistable.
    """
    if head.hidden_dims != STANDARD_HIDDEN:
        raise ValueError(f"checkpoint layout requires hidden dims {STANDARD_HIDDEN}")
    buf = bytearray()
    buf += MEMH_MAGIC
    buf += struct.pack("<HII", MEMH_VERSION, head.input_dim, head.label_count)
    for _, arr in head.params():
        buf += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path: str | Path) -> MlpHead:
    data = Path(path).read_bytes()
    if len(data) < 14 + 4:
        raise CorruptionError(f"{path}: shorter than header + checksum")
    if data[:4] != MEMH_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, input_dim, label_count = struct.unpack_from("<HII", data, 4)
    if version != MEMH_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    body, trailer = data[:-4], data[-4:]
    if zlib.crc32(body) & 0xFFFFFFFF != struct.unpack("<I", trailer)[0]:
        raise CorruptionError(f"{path}: CRC mismatch")
    dims = (input_dim, *STANDARD_HIDDEN, label_count)
    shapes = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        shapes.append((fan_in, fan_out))
        shapes.append((fan_out,))
    off = 14
    arrays = []
    for shape in shapes:
        size = int(np.prod(shape))
        if off + 4 * size > len(body):
            raise CorruptionError(f"{path}: truncated parameter block")
        arrays.append(
            np.frombuffer(body, dtype="<f4", count=size, offset=off).reshape(shape).astype(np.float64)
        )
        off += 4 * size
    if off != len(body):
        raise CorruptionError(f"{path}: {len(body) - off} trailing bytes")
    return MlpHead(*arrays)


def save_history(path: str | Path, history: list[HistoryEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in history:
            fh.write(
                json.dumps(
                    {"epoch": e.epoch, "loss": e.loss, "dev_macro_f1": e.dev_macro_f1},
                    sort_keys=True,
                )
                + "\n"
            )
