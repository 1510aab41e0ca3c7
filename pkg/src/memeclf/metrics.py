"""Evaluation harness: macro-average F1 for binary tasks, weighted-average F1
for the multi-label type task, per-label breakdowns and model comparison tables."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UndefinedMetricError
from .tasks import Task


@dataclass(frozen=True)
class LabelCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def support(self) -> int:
        return self.tp + self.fn


@dataclass
class ConfusionCounts:
    labels: tuple[str, ...]
    counts: dict[str, LabelCounts]
    sample_count: int


def _as_binary_matrix(y: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 1-D or 2-D")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} values must be 0/1")
    return arr.astype(np.int64)


def confusion(
    y_true: np.ndarray, y_pred: np.ndarray, labels: tuple[str, ...] | None = None
) -> ConfusionCounts:
    """Exact per-label tp/fp/fn/tn counts."""
    t = _as_binary_matrix(y_true, "y_true")
    p = _as_binary_matrix(y_pred, "y_pred")
    if t.shape != p.shape:
        raise ShapeError(f"y_true shape {t.shape} != y_pred shape {p.shape}")
    if labels is None:
        labels = tuple(f"label_{i}" for i in range(t.shape[1]))
    if len(labels) != t.shape[1]:
        raise ShapeError(f"{len(labels)} label names for {t.shape[1]} columns")
    counts = {}
    for j, name in enumerate(labels):
        tc, pc = t[:, j], p[:, j]
        counts[name] = LabelCounts(
            tp=int(np.sum((tc == 1) & (pc == 1))),
            fp=int(np.sum((tc == 0) & (pc == 1))),
            fn=int(np.sum((tc == 1) & (pc == 0))),
            tn=int(np.sum((tc == 0) & (pc == 0))),
        )
    return ConfusionCounts(tuple(labels), counts, t.shape[0])


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    """2tp / (2tp + fp + fn), defined 0 when the denominator is 0."""
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def precision_recall_f1(c: LabelCounts) -> tuple[float, float, float]:
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 0.0
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
    return precision, recall, f1_from_counts(c.tp, c.fp, c.fn)


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Unweighted mean of positive-class F1 and negative-class F1 (binary task)."""
    t = np.asarray(y_true).ravel()
    p = np.asarray(y_pred).ravel()
    if t.size == 0:
        raise ValueError("macro_f1 needs at least one sample")
    if t.shape != p.shape:
        raise ShapeError(f"lengths differ: {t.shape} vs {p.shape}")
    pos = confusion(t, p).counts["label_0"]
    neg = confusion(1 - t, 1 - p).counts["label_0"]
    return 0.5 * (f1_from_counts(pos.tp, pos.fp, pos.fn) + f1_from_counts(neg.tp, neg.fp, neg.fn))


def task_macro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean of per-column binary macro-F1; the headline score for detection tasks.

    Reduces to plain macro_f1 when there is a single label column.
    """
    t = _as_binary_matrix(y_true, "y_true")
    p = _as_binary_matrix(y_pred, "y_pred")
    if t.shape != p.shape:
        raise ShapeError(f"y_true shape {t.shape} != y_pred shape {p.shape}")
    return float(np.mean([macro_f1(t[:, j], p[:, j]) for j in range(t.shape[1])]))


def weighted_f1(y_true_multi: np.ndarray, y_pred_multi: np.ndarray) -> float:
    """Per-label F1 averaged with weights equal to true-label supports."""
    t = _as_binary_matrix(y_true_multi, "y_true")
    p = _as_binary_matrix(y_pred_multi, "y_pred")
    if t.shape != p.shape:
        raise ShapeError(f"y_true shape {t.shape} != y_pred shape {p.shape}")
    cm = confusion(t, p)
    supports = np.array([cm.counts[name].support for name in cm.labels], dtype=np.float64)
    if supports.sum() == 0:
        raise UndefinedMetricError("weighted_f1 undefined: every label support is 0")
    f1s = np.array(
        [f1_from_counts(cm.counts[n].tp, cm.counts[n].fp, cm.counts[n].fn) for n in cm.labels]
    )
    return float((f1s * supports).sum() / supports.sum())


@dataclass
class LabelScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    task: str
    model_tag: str
    sample_count: int
    per_label: dict[str, LabelScores]
    macro_f1: float
    weighted_f1: float | None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "model_tag": self.model_tag,
            "sample_count": self.sample_count,
            "per_label": {
                k: {"precision": v.precision, "recall": v.recall, "f1": v.f1, "support": v.support}
                for k, v in self.per_label.items()
            },
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        return EvalReport(
            task=d["task"],
            model_tag=d["model_tag"],
            sample_count=d["sample_count"],
            per_label={
                k: LabelScores(v["precision"], v["recall"], v["f1"], v["support"])
                for k, v in d["per_label"].items()
            },
            macro_f1=d["macro_f1"],
            weighted_f1=d["weighted_f1"],
        )


def evaluate_predictions(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    task: Task,
    model_tag: str,
    include_all_labels_in_weighted: bool = False,
) -> EvalReport:
    """Full report for one model on one task.

    weighted_f1 averages over the task's type labels by default; the flag
    widens it to the full vocabulary (both readings of the type-classification
    metric are supported).
    """
    t = _as_binary_matrix(y_true, "y_true")
    p = _as_binary_matrix(y_pred, "y_pred")
    cm = confusion(t, p, labels=task.labels)
    per_label = {}
    for name in task.labels:
        precision, recall, f1 = precision_recall_f1(cm.counts[name])
        per_label[name] = LabelScores(precision, recall, f1, cm.counts[name].support)

    weighted_labels = task.labels if include_all_labels_in_weighted else task.type_labels
    idx = [task.labels.index(name) for name in weighted_labels]
    try:
        wf1: float | None = weighted_f1(t[:, idx], p[:, idx])
    except UndefinedMetricError:
        wf1 = None
    return EvalReport(
        task=task.name,
        model_tag=model_tag,
        sample_count=t.shape[0],
        per_label=per_label,
        macro_f1=task_macro_f1(t, p),
        weighted_f1=wf1,
    )


# Published score statistics of the MAMI challenge participants, kept as
# reference context for comparison tables.
MAMI_CHALLENGE_STATS = {
    "mami_a": {
        "metric": "macro_f1",
        "min": 0.481,
        "q1": 0.649,
        "mean": 0.680,
        "median": 0.679,
        "std": 0.064,
        "q3": 0.722,
        "max": 0.834,
    },
    "mami_b": {
        "metric": "weighted_f1",
        "min": 0.467,
        "q1": 0.634,
        "mean": 0.663,
        "median": 0.680,
        "std": 0.059,
        "q3": 0.706,
        "max": 0.731,
    },
}


@dataclass
class ComparisonRow:
    model_tag: str
    macro_f1: float
    weighted_f1: float | None
    best_macro: bool = False
    best_weighted: bool = False


@dataclass
class ComparisonTable:
    task: str
    primary_metric: str
    rows: list[ComparisonRow]

    def to_json(self) -> str:
        return json.dumps(
            {
                "task": self.task,
                "primary_metric": self.primary_metric,
                "rows": [
                    {
                        "model_tag": r.model_tag,
                        "macro_f1": r.macro_f1,
                        "weighted_f1": r.weighted_f1,
                        "best_macro": r.best_macro,
                        "best_weighted": r.best_weighted,
                    }
                    for r in self.rows
                ],
            },
            sort_keys=True,
        )

    def to_text(self) -> str:
        width = max([len("model"), *(len(r.model_tag) for r in self.rows)])
        lines = [
            f"task: {self.task} (primary metric: {self.primary_metric})",
            f"{'model'.ljust(width)}  {'macro_f1':>10}  {'weighted_f1':>12}",
        ]
        for r in self.rows:
            wf = "-" if r.weighted_f1 is None else f"{r.weighted_f1:.4f}"
            flags = "*" if (r.best_macro if self.primary_metric == "macro_f1" else r.best_weighted) else " "
            lines.append(f"{r.model_tag.ljust(width)}  {r.macro_f1:>10.4f}  {wf:>12}{flags}")
        return "\n".join(lines)


def compare_report(reports: list[EvalReport]) -> ComparisonTable:
    """Side-by-side table over one task, best score flagged per column."""
    if not reports:
        raise ValueError("compare_report needs at least one report")
    tasks = {r.task for r in reports}
    if len(tasks) > 1:
        raise ValueError(f"reports mix tasks: {sorted(tasks)}")
    task = reports[0].task
    primary = "weighted_f1" if task == "mami_b" else "macro_f1"

    def sort_key(r: EvalReport) -> tuple[float, str]:
        score = r.weighted_f1 if primary == "weighted_f1" else r.macro_f1
        return (-(score if score is not None else -1.0), r.model_tag)

    ordered = sorted(reports, key=sort_key)
    rows = [ComparisonRow(r.model_tag, r.macro_f1, r.weighted_f1) for r in ordered]
    best_macro = max(r.macro_f1 for r in rows)
    weighted_vals = [r.weighted_f1 for r in rows if r.weighted_f1 is not None]
    for r in rows:
        r.best_macro = r.macro_f1 == best_macro
        r.best_weighted = bool(weighted_vals) and r.weighted_f1 == max(weighted_vals)
    return ComparisonTable(task, primary, rows)
