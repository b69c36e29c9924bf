"""Classification metrics: confusion matrix, accuracy, and the per-class
precision/recall/F1 report with macro and weighted averages.

Rates are kept at full precision internally; the text rendering rounds
to two decimals. Zero-denominator rates are defined as 0 and flagged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    """counts[t][p] = number of items with true class t predicted as p."""
    counts: np.ndarray
    class_names: list

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def supports(self):
        return self.counts.sum(axis=1)

    def to_csv(self):
        lines = ["true\\pred," + ",".join(self.class_names)]
        for name, row in zip(self.class_names, self.counts):
            lines.append(name + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def confusion_matrix(y_true, y_pred, num_classes, class_names=None) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} true vs {y_pred.shape[0]} predicted")
    for name, ids in (("true", y_true), ("predicted", y_pred)):
        if ids.size and (ids.min() < 0 or ids.max() >= num_classes):
            raise ValueError(f"{name} ids outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    if class_names is None:
        class_names = [str(i) for i in range(num_classes)]
    return ConfusionMatrix(counts, list(class_names))


def accuracy(cm: ConfusionMatrix) -> float:
    """Correct predictions over total, as a percentage. For K=2 this is
    the (TP+TN)/(TP+FP+TN+FN) form exactly."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    return float(np.trace(cm.counts)) / cm.total * 100.0


@dataclass
class ClassRow:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    rows: list
    accuracy: float  # fraction in [0, 1], matching report-table convention
    macro_avg: tuple
    weighted_avg: tuple
    total: int
    zero_division: bool = field(default=False)

    def to_csv(self):
        lines = ["class,precision,recall,f1,support"]
        for r in self.rows:
            lines.append(f"{r.name},{r.precision!r},{r.recall!r},{r.f1!r},{r.support}")
        lines.append(f"accuracy,,,{self.accuracy!r},{self.total}")
        m, w = self.macro_avg, self.weighted_avg
        lines.append(f"macro_avg,{m[0]!r},{m[1]!r},{m[2]!r},{self.total}")
        lines.append(f"weighted_avg,{w[0]!r},{w[1]!r},{w[2]!r},{self.total}")
        return "\n".join(lines) + "\n"

    def format_text(self):
        """Aligned table in the familiar report layout, 2-decimal rates."""
        width = max([len("weighted avg")] + [len(r.name) for r in self.rows])
        header = f"{'':>{width}}  precision  recall  f1-score  support"
        lines = [header, ""]
        for r in self.rows:
            lines.append(f"{r.name:>{width}}  {r.precision:9.2f}  {r.recall:6.2f}"
                         f"  {r.f1:8.2f}  {r.support:7d}")
        lines.append("")
        lines.append(f"{'accuracy':>{width}}  {'':9}  {'':6}"
                     f"  {self.accuracy:8.2f}  {self.total:7d}")
        for name, (p, r, f1) in (("macro avg", self.macro_avg),
                                 ("weighted avg", self.weighted_avg)):
            lines.append(f"{name:>{width}}  {p:9.2f}  {r:6.2f}  {f1:8.2f}"
                         f"  {self.total:7d}")
        if self.zero_division:
            lines.append("")
            lines.append("note: rates with zero denominators are reported as 0")
        return "\n".join(lines) + "\n"


def _safe_div(num, den):
    return (num / den, False) if den > 0 else (0.0, True)


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """One-vs-rest precision/recall/F1 per class plus unweighted (macro)
    and support-weighted averages."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    counts = cm.counts
    rows = []
    zero_hit = False
    for c, name in enumerate(cm.class_names):
        tp = int(counts[c, c])
        fp = int(counts[:, c].sum()) - tp
        fn = int(counts[c, :].sum()) - tp
        precision, z1 = _safe_div(tp, tp + fp)
        recall, z2 = _safe_div(tp, tp + fn)
        f1, z3 = _safe_div(2 * precision * recall, precision + recall)
        zero_hit = zero_hit or z1 or z2 or z3
        rows.append(ClassRow(name, precision, recall, f1, tp + fn))
    k = len(rows)
    macro = (sum(r.precision for r in rows) / k,
             sum(r.recall for r in rows) / k,
             sum(r.f1 for r in rows) / k)
    total = cm.total
    weighted = (sum(r.precision * r.support for r in rows) / total,
                sum(r.recall * r.support for r in rows) / total,
                sum(r.f1 * r.support for r in rows) / total)
    acc_fraction = float(np.trace(counts)) / total
    return ClassificationReport(rows, acc_fraction, macro, weighted,
                                total, zero_hit)
