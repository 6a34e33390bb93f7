"""Confusion-matrix evaluation for binary link prediction.

Provides the four classic metrics plus two prevalence-weighted variants:
a weighted f-score (sum of per-class f-scores weighted by class share)
and a prevalence-weighted balanced accuracy.  Degenerate denominators
never raise; the affected metric is reported as 0 and flagged, so a
benchmark sweep survives pathological splits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")
        if self.total == 0:
            raise ValueError("confusion matrix must count at least one prediction")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def weight_positive(self) -> float:
        """Share of positive ground truth, w_p = (tp+fn)/N."""
        return (self.tp + self.fn) / self.total

    @property
    def weight_negative(self) -> float:
        return (self.fp + self.tn) / self.total


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    weighted_f_score: float
    balanced_accuracy_weighted: float
    balanced_accuracy_uniform: float  # equal class weights; comparison column only
    flags: tuple[str, ...] = ()


def confusion(predicted, actual) -> ConfusionMatrix:
    """Count tp/fn/fp/tn with label 1 = positive."""
    pred = np.asarray(predicted)
    true = np.asarray(actual)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError(f"label vectors must share one dimension, got {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise ValueError("cannot evaluate empty label vectors")
    bad = ~np.isin(pred, (0, 1)) | ~np.isin(true, (0, 1))
    if bad.any():
        raise ValueError("labels must be 0 or 1")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fn=int(np.sum((pred == 0) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        tn=int(np.sum((pred == 0) & (true == 0))),
    )


def _ratio(num: int, den: int, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(f"degenerate:{name}")
        return 0.0
    return num / den


def basic_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float, list[str]]:
    """(accuracy, precision, recall, f_score) plus degeneracy flags."""
    flags: list[str] = []
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", flags)
    if precision + recall == 0.0:
        flags.append("degenerate:f_score")
        f_score = 0.0
    else:
        f_score = 2.0 * precision * recall / (precision + recall)
    return accuracy, precision, recall, f_score, flags


def _class_f_score(tp: int, fp: int, fn: int, name: str, flags: list[str]) -> float:
    precision = _ratio(tp, tp + fp, f"{name}_precision", flags)
    recall = _ratio(tp, tp + fn, f"{name}_recall", flags)
    if precision + recall == 0.0:
        flags.append(f"degenerate:{name}_f_score")
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def weighted_f_score(cm: ConfusionMatrix) -> tuple[float, list[str]]:
    """Sum over both classes of 2 * w_k * P_k R_k / (P_k + R_k), w_k = n_k / N.

    The negative class uses the standard role swap: tn acts as that
    class's true positives, fn as its false positives.
    """
    flags: list[str] = []
    f_pos = _class_f_score(cm.tp, cm.fp, cm.fn, "positive", flags)
    f_neg = _class_f_score(cm.tn, cm.fn, cm.fp, "negative", flags)
    return cm.weight_positive * f_pos + cm.weight_negative * f_neg, flags


def balanced_accuracy_weighted(cm: ConfusionMatrix) -> tuple[float, list[str]]:
    """w_p * tp/(tp+fn) + w_n * tn/(tn+fp) with prevalence weights.

    With w_p = (tp+fn)/N this reduces algebraically to plain accuracy;
    it is kept in this form as the benchmark's headline metric.
    """
    flags: list[str] = []
    recall_pos = _ratio(cm.tp, cm.tp + cm.fn, "recall_positive", flags)
    recall_neg = _ratio(cm.tn, cm.tn + cm.fp, "recall_negative", flags)
    return cm.weight_positive * recall_pos + cm.weight_negative * recall_neg, flags


def balanced_accuracy_uniform(cm: ConfusionMatrix) -> tuple[float, list[str]]:
    """Mean of the two class recalls (equal weights); comparison column only."""
    flags: list[str] = []
    recall_pos = _ratio(cm.tp, cm.tp + cm.fn, "recall_positive", flags)
    recall_neg = _ratio(cm.tn, cm.tn + cm.fp, "recall_negative", flags)
    return 0.5 * recall_pos + 0.5 * recall_neg, flags


def evaluate(predicted, actual) -> MetricReport:
    """Full metric report for one prediction run."""
    cm = confusion(predicted, actual)
    accuracy, precision, recall, f_score, flags = basic_metrics(cm)
    fw, fw_flags = weighted_f_score(cm)
    bw, bw_flags = balanced_accuracy_weighted(cm)
    bu, _ = balanced_accuracy_uniform(cm)
    seen: list[str] = []
    for flag in flags + fw_flags + bw_flags:
        if flag not in seen:
            seen.append(flag)
    return MetricReport(accuracy, precision, recall, f_score, fw, bw, bu, tuple(seen))


def format_report_row(dataset: str, architecture: str, embedder: str,
                      report: MetricReport) -> str:
    """One CSV row: dataset,architecture,embedder,acc_bw,precision,recall,fw_score,flags."""
    return ",".join([
        dataset, architecture, embedder,
        f"{report.balanced_accuracy_weighted:.4f}",
        f"{report.precision:.4f}",
        f"{report.recall:.4f}",
        f"{report.weighted_f_score:.4f}",
        ";".join(report.flags),
    ])


REPORT_HEADER = "dataset,architecture,embedder,acc_bw,precision,recall,fw_score,flags"
