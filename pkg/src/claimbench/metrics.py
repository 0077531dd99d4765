"""Evaluation metrics for imbalanced binary classification.

Positive class is the minority (claim = 1). Precision, recall and F1 return
0 when their denominator is 0, so the degenerate all-negative predictor is
representable rather than an error. AUC is the rank-sum (midrank) statistic;
AUPRC is step-wise average precision with tied scores collapsed into one
threshold block (no trapezoidal interpolation, which over-estimates in PR
space).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

METRIC_COLUMNS = ("accuracy", "f1", "precision", "recall", "auc", "auprc", "gini")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    f1: float
    precision: float
    recall: float
    auc: float
    auprc: float
    gini: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_COLUMNS}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    def csv_row(self) -> str:
        # column order follows the result-table convention:
        # accuracy, F1, precision, recall, AUC, AUPRC (gini appended)
        return ",".join(repr(getattr(self, name)) for name in METRIC_COLUMNS)


def _check_binary(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise MetricsError("labels must be 0 or 1")
    return labels.astype(np.int64)


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    y_true = _check_binary(y_true)
    y_pred = _check_binary(y_pred)
    if y_true.shape != y_pred.shape:
        raise MetricsError("label vectors differ in length")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        return 0.0
    return (cm.tp + cm.tn) / cm.total


def _midranks(scores: np.ndarray) -> np.ndarray:
    """Ranks 1..n of scores ascending, tied values sharing their mean rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(y_true, scores) -> float:
    """Probability that a random positive outscores a random negative
    (ties credited 1/2), via the rank-sum statistic."""
    y_true = _check_binary(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise MetricsError("scores must be finite")
    n_pos = int(y_true.sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("both classes must be present")
    ranks = _midranks(scores)
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pr_auc(y_true, scores) -> float:
    """Average precision: sum over descending-score threshold blocks of
    (R_n - R_{n-1}) * P_n, tied scores processed as one block."""
    y_true = _check_binary(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(y_true.sum())
    if n_pos == 0:
        raise MetricsError("no positive labels")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_true = y_true[order]
    tp_cum = np.cumsum(sorted_true)
    n_cum = np.arange(1, y_true.size + 1)
    # last index of each tied block
    block_end = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    tp = tp_cum[block_end].astype(np.float64)
    precision = tp / n_cum[block_end]
    recall = tp / n_pos
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * precision))


def gini(auc: float) -> float:
    """Normalized Gini of a ranking: 2*AUC - 1."""
    if not 0.0 <= auc <= 1.0:
        raise MetricsError(f"auc {auc} outside [0, 1]")
    return 2 * auc - 1


def full_report(y_true, scores, threshold: float = 0.5) -> tuple[MetricsReport, ConfusionMatrix]:
    """All metrics at once; hard predictions are score >= threshold."""
    y_true = _check_binary(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    y_pred = (scores >= threshold).astype(np.int64)
    cm = confusion_matrix(y_true, y_pred)
    precision, recall, f1 = precision_recall_f1(cm)
    auc = roc_auc(y_true, scores)
    report = MetricsReport(
        accuracy=accuracy(cm),
        f1=f1,
        precision=precision,
        recall=recall,
        auc=auc,
        auprc=pr_auc(y_true, scores),
        gini=gini(auc),
    )
    return report, cm
