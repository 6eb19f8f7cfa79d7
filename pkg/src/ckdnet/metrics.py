"""Confusion matrix, per-class precision/recall/F1, one-vs-rest ROC and PR curves."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, InputError
from .imgdata import CLASS_NAMES

N_CLASSES = len(CLASS_NAMES)


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    """counts[t, p] = number of samples with true class t predicted as p."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise InputError(f"y_true {t.shape} and y_pred {p.shape} must be equal-length 1-D")
    for arr in (t, p):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise InputError(f"labels must lie in 0..{n_classes - 1}")
    return np.bincount(t * n_classes + p, minlength=n_classes * n_classes).reshape(
        n_classes, n_classes)


def accuracy(cm: np.ndarray) -> float:
    total = cm.sum()
    if total == 0:
        raise InputError("accuracy of an empty confusion matrix")
    return float(np.trace(cm) / total)


@dataclass
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    auc: float = float("nan")
    average_precision: float = float("nan")
    flags: list = field(default_factory=list)


def _ratio(num, den, flag, flags):
    if den == 0:
        flags.append(flag)
        return 0.0
    return float(num / den)


def class_precision_recall_f1(cm: np.ndarray, names=None) -> list[ClassMetrics]:
    """Per-class rows. A zero denominator gives 0.0 and a flag on the row."""
    names = names or [str(i) for i in range(cm.shape[0])]
    rows = []
    for c in range(cm.shape[0]):
        tp = cm[c, c]
        flags = []
        p = _ratio(tp, cm[:, c].sum(), "no-predictions", flags)
        r = _ratio(tp, cm[c, :].sum(), "no-support", flags)
        f1 = _ratio(2 * p * r, p + r, "f1-undefined", flags)
        rows.append(ClassMetrics(names[c], p, r, f1, int(cm[c, :].sum()), flags=flags))
    return rows


@dataclass
class CurvePoints:
    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray

    def to_csv(self, path, x_name: str, y_name: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", x_name, y_name])
            for th, x, y in zip(self.thresholds, self.x, self.y):
                writer.writerow([repr(float(th)), repr(float(x)), repr(float(y))])


def _ovr_counts(scores, y_true, class_id):
    """Cumulative TP/FP at each distinct score, taken in descending order."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 2:
        scores = scores[:, class_id]
    pos = np.asarray(y_true) == class_id
    if scores.shape != pos.shape or scores.size == 0:
        raise InputError("scores and labels must be non-empty and equal length")
    order = np.argsort(-scores, kind="stable")
    s, p = scores[order], pos[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    return s[last], tp[last], fp[last], int(p.sum()), int((~p).sum())


def roc_curve_ovr(scores, y_true, class_id: int) -> CurvePoints:
    """ROC for ``class_id`` against the rest; ``scores`` may be [n, 4] or [n]."""
    th, tp, fp, n_pos, n_neg = _ovr_counts(scores, y_true, class_id)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError(f"class {class_id} needs both positives and negatives for ROC")
    x = np.r_[0.0, fp / n_neg]
    y = np.r_[0.0, tp / n_pos]
    return CurvePoints(x, y, np.r_[np.inf, th])


def auc_trapezoid(points: CurvePoints) -> float:
    x, y = np.asarray(points.x), np.asarray(points.y)
    if np.any(np.diff(x) < 0):
        raise InputError("curve x values must be non-decreasing")
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


def pr_curve_ovr(scores, y_true, class_id: int) -> CurvePoints:
    """(recall, precision) at each distinct score threshold, descending."""
    th, tp, fp, n_pos, _ = _ovr_counts(scores, y_true, class_id)
    if n_pos == 0:
        raise DegenerateError(f"class {class_id} has no positives")
    return CurvePoints(tp / n_pos, tp / (tp + fp), th)


def average_precision(points: CurvePoints) -> float:
    """Step-wise sum of (R_i - R_{i-1}) * P_i with R_0 = 0."""
    recall = np.r_[0.0, points.x]
    return float(np.sum(np.diff(recall) * points.y))


@dataclass
class ClassReport:
    rows: list  # ClassMetrics, one per class
    accuracy: float
    confusion: np.ndarray

    def macro(self) -> ClassMetrics:
        def mean(attr):
            vals = [getattr(r, attr) for r in self.rows]
            return float(np.mean(vals))
        return ClassMetrics("macro avg", mean("precision"), mean("recall"), mean("f1"),
                            int(sum(r.support for r in self.rows)), mean("auc"),
                            mean("average_precision"))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self._csv())

    def _csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "precision", "recall", "f1", "auc", "average_precision",
                         "support", "flags"])
        for r in [*self.rows, self.macro()]:
            writer.writerow([r.name, repr(r.precision), repr(r.recall), repr(r.f1), repr(r.auc),
                             repr(r.average_precision), r.support, ";".join(r.flags)])
        # accuracy goes under the f1 column, as in the usual classification report
        writer.writerow(["accuracy", "", "", repr(self.accuracy), "", "",
                         int(self.confusion.sum()), ""])
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'Class':<12}{'Precision':>10}{'Recall':>10}{'F1-Score':>10}{'AUC':>8}" \
               f"{'AP':>8}{'Support':>9}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.name:<12}{r.precision:>10.2f}{r.recall:>10.2f}{r.f1:>10.2f}"
                         f"{r.auc:>8.2f}{r.average_precision:>8.2f}{r.support:>9d}"
                         + (f"  [{', '.join(r.flags)}]" if r.flags else ""))
        lines.append("-" * len(head))
        m = self.macro()
        lines.append(f"{'macro avg*':<12}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}"
                     f"{m.auc:>8.2f}{m.average_precision:>8.2f}{m.support:>9d}")
        lines.append(f"{'accuracy*':<12}{self.accuracy:>10.4f}")
        lines.append("* extension rows, not part of the per-class table")
        return "\n".join(lines) + "\n"


def classification_report(y_true, probs, names=CLASS_NAMES) -> ClassReport:
    """Every per-class metric from softmax outputs; predictions are the argmax."""
    probs = np.asarray(probs)
    y_true = np.asarray(y_true)
    cm = confusion_matrix(y_true, np.argmax(probs, axis=1), probs.shape[1])
    rows = class_precision_recall_f1(cm, list(names))
    for c, row in enumerate(rows):
        try:
            row.auc = auc_trapezoid(roc_curve_ovr(probs, y_true, c))
        except DegenerateError:
            row.auc = 0.0
            row.flags.append("auc-undefined")
        try:
            row.average_precision = average_precision(pr_curve_ovr(probs, y_true, c))
        except DegenerateError:
            row.average_precision = 0.0
            row.flags.append("ap-undefined")
    return ClassReport(rows, accuracy(cm), cm)


def write_confusion_csv(cm: np.ndarray, path, names=CLASS_NAMES) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred", *names])
        for name, row in zip(names, cm):
            writer.writerow([name, *row.tolist()])
