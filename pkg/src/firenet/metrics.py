"""Binary-classifier evaluation: confusion matrix, accuracy, precision /
recall / F1, per-class classification report, ROC curve and AUC.

All functions are pure and operate on integer label arrays (0 = no_fire,
1 = fire) and float score arrays (probability of the positive class).
Zero-denominator metrics return 0.0 with an explicit ``undefined`` flag
instead of NaN so every report stays serializable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError

CLASS_NAMES = {0: "no_fire", 1: "fire"}
REPORT_CLASS_LABELS = {0: "No Fire", 1: "Fire"}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int
    positive_class: int = 1

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise InputError(f"confusion count {name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """The same outcomes with the other class treated as positive."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp,
                               positive_class=1 - self.positive_class)


class PRF1(NamedTuple):
    """Precision/recall/F1 triple plus flags naming any metric whose
    denominator was zero (those metrics are reported as 0.0)."""

    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()


class ClassRow(NamedTuple):
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    undefined: tuple[str, ...] = ()


class RocPoint(NamedTuple):
    threshold: float
    fpr: float
    tpr: float


def _as_labels(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InputError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr.astype(np.int64)


def confusion(preds, truth, positive: int = 1) -> ConfusionMatrix:
    """Count true/false positives/negatives of ``preds`` against ``truth``
    with ``positive`` as the positive class."""
    preds = _as_labels(preds, "preds")
    truth = _as_labels(truth, "truth")
    if preds.shape != truth.shape:
        raise InputError(
            f"preds and truth lengths differ: {preds.shape[0]} vs {truth.shape[0]}"
        )
    if preds.size == 0:
        raise InputError("cannot build a confusion matrix from zero samples")
    pred_pos = preds == positive
    true_pos = truth == positive
    return ConfusionMatrix(
        tp=int(np.sum(pred_pos & true_pos)),
        fp=int(np.sum(pred_pos & ~true_pos)),
        fn=int(np.sum(~pred_pos & true_pos)),
        tn=int(np.sum(~pred_pos & ~true_pos)),
        positive_class=positive,
    )


def accuracy(cm: ConfusionMatrix) -> float:
    """Correct predictions over total samples."""
    if cm.total == 0:
        raise InputError("accuracy of an empty confusion matrix is undefined")
    return (cm.tp + cm.tn) / cm.total


def precision_recall_f1(cm: ConfusionMatrix) -> PRF1:
    """Precision tp/(tp+fp), recall tp/(tp+fn), and their harmonic mean.

    Any zero denominator yields 0.0 for that metric and its name is listed
    in the result's ``undefined`` flags.
    """
    undefined = []
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return PRF1(precision, recall, f1, tuple(undefined))


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate metrics with the positive class as reference, per-class
    rows, macro/weighted averages, and (when scores are given) AUC."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix
    per_class: tuple[ClassRow, ...]
    macro_avg: ClassRow
    weighted_avg: ClassRow
    auc: float | None = None
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "confusion": {"tp": self.confusion.tp, "fp": self.confusion.fp,
                          "fn": self.confusion.fn, "tn": self.confusion.tn},
            "per_class": [
                {"class": row.name, "precision": row.precision,
                 "recall": row.recall, "f1": row.f1, "support": row.support}
                for row in self.per_class
            ],
            "macro_avg": {"precision": self.macro_avg.precision,
                          "recall": self.macro_avg.recall,
                          "f1": self.macro_avg.f1},
            "weighted_avg": {"precision": self.weighted_avg.precision,
                             "recall": self.weighted_avg.recall,
                             "f1": self.weighted_avg.f1},
            "undefined": list(self.undefined),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        """Render the report: aggregate block at 6 decimals, then a
        per-class table at 2 decimals."""
        lines = [
            f"accuracy:  {self.accuracy:.6f}",
            f"precision: {self.precision:.6f}",
            f"recall:    {self.recall:.6f}",
            f"f1:        {self.f1:.6f}",
        ]
        if self.auc is not None:
            lines.append(f"auc:       {self.auc:.6f}")
        lines.append("")
        name_width = max(len("weighted avg"),
                         *(len(row.name) for row in self.per_class))
        header = (f"{'':<{name_width}}  {'precision':>9}  {'recall':>9}"
                  f"  {'f1-score':>9}  {'support':>9}")
        lines.append(header)
        total = self.confusion.total
        for row in self.per_class:
            lines.append(f"{row.name:<{name_width}}  {row.precision:>9.2f}"
                         f"  {row.recall:>9.2f}  {row.f1:>9.2f}"
                         f"  {row.support:>9}")
        lines.append(f"{'accuracy':<{name_width}}  {'':>9}  {'':>9}"
                     f"  {self.accuracy:>9.2f}  {total:>9}")
        for label, row in (("macro avg", self.macro_avg),
                           ("weighted avg", self.weighted_avg)):
            lines.append(f"{label:<{name_width}}  {row.precision:>9.2f}"
                         f"  {row.recall:>9.2f}  {row.f1:>9.2f}"
                         f"  {row.support:>9}")
        if self.undefined:
            lines.append("")
            lines.append("undefined (reported as 0): " + ", ".join(self.undefined))
        return "\n".join(lines) + "\n"


def classification_report(preds, truth, scores=None,
                          positive: int = 1) -> MetricsReport:
    """Full evaluation: aggregate metrics with ``positive`` as reference,
    one row per class with that class as positive, macro (unweighted) and
    weighted (support-weighted) averages, and AUC when scores are given.

    If truth contains a single class the rows whose denominators vanish are
    reported as 0 and flagged rather than raising.
    """
    cm = confusion(preds, truth, positive)
    agg = precision_recall_f1(cm)
    truth_arr = _as_labels(truth, "truth")

    rows = []
    undefined = []
    for label in (0, 1):
        cm_label = cm if label == positive else cm.swapped()
        prf = precision_recall_f1(cm_label)
        support = int(np.sum(truth_arr == label))
        name = REPORT_CLASS_LABELS.get(label, str(label))
        rows.append(ClassRow(name, prf.precision, prf.recall, prf.f1,
                             support, prf.undefined))
        undefined.extend(f"{name}.{m}" for m in prf.undefined)
    total = sum(row.support for row in rows)
    macro = ClassRow("macro avg",
                     sum(r.precision for r in rows) / len(rows),
                     sum(r.recall for r in rows) / len(rows),
                     sum(r.f1 for r in rows) / len(rows),
                     total)
    weighted = ClassRow(
        "weighted avg",
        sum(r.precision * r.support for r in rows) / total,
        sum(r.recall * r.support for r in rows) / total,
        sum(r.f1 * r.support for r in rows) / total,
        total,
    )
    auc = None
    if scores is not None:
        _, auc = roc_auc(scores, truth)
    return MetricsReport(
        accuracy=accuracy(cm),
        precision=agg.precision,
        recall=agg.recall,
        f1=agg.f1,
        confusion=cm,
        per_class=tuple(rows),
        macro_avg=macro,
        weighted_avg=weighted,
        auc=auc,
        undefined=tuple(undefined),
    )


def roc_curve(scores, truth, positive: int = 1) -> list[RocPoint]:
    """Empirical ROC points, one threshold per distinct score (descending,
    samples with score >= threshold predicted positive; equal scores move
    in one step), starting at (0, 0) and ending at (1, 1)."""
    scores_arr = np.asarray(scores, dtype=np.float64)
    truth_arr = _as_labels(truth, "truth")
    if scores_arr.shape != truth_arr.shape:
        raise InputError(
            f"scores and truth lengths differ: {scores_arr.shape[0]}"
            f" vs {truth_arr.shape[0]}"
        )
    pos = truth_arr == positive
    n_pos, n_neg = int(np.sum(pos)), int(np.sum(~pos))
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC requires both classes present in truth")
    points = [RocPoint(float("inf"), 0.0, 0.0)]
    tp = fp = 0
    order = np.argsort(-scores_arr, kind="stable")
    i = 0
    while i < len(order):
        threshold = scores_arr[order[i]]
        while i < len(order) and scores_arr[order[i]] == threshold:
            if pos[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append(RocPoint(float(threshold), fp / n_neg, tp / n_pos))
    last = points[-1]
    if (last.fpr, last.tpr) != (1.0, 1.0):
        points.append(RocPoint(float(np.min(scores_arr)), 1.0, 1.0))
    return points


def roc_auc(scores, truth, positive: int = 1):
    """ROC curve as (fpr, tpr) pairs plus the area under it by the
    trapezoidal rule (equal to the probability that a positive sample
    outranks a negative one, ties counting one half)."""
    points = roc_curve(scores, truth, positive)
    curve = [(p.fpr, p.tpr) for p in points]
    auc = 0.0
    for (fpr0, tpr0), (fpr1, tpr1) in zip(curve, curve[1:]):
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0
    return curve, float(auc)


def roc_csv(points: Sequence[RocPoint]) -> str:
    """Comma-separated ``threshold,fpr,tpr`` rows for the curve."""
    lines = ["threshold,fpr,tpr"]
    for p in points:
        lines.append(f"{p.threshold},{p.fpr},{p.tpr}")
    return "\n".join(lines) + "\n"
