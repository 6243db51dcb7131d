"""Classification metrics from first principles: ROC/AUC with Mann-Whitney
tie handling, confusion matrices under the strict threshold rule, accuracy,
and f1 variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import MetricError, ParameterError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    """(FPR, TPR) points swept from the highest score threshold down."""

    fpr: tuple
    tpr: tuple


def _check_binary(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise MetricError("scores and labels must be equal-length 1-d arrays")
    if not np.isin(labels, (0, 1)).all():
        raise MetricError("labels must be 0/1")
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise MetricError("both classes must be present")
    return scores, labels.astype(int), n_pos


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: (#{pos>neg} + 0.5 #{ties}) / (#pos #neg), computed
    via one sorted rank pass.

    The returned float is bit-identical to the pairwise-counting definition:
    both reduce to the same integer numerator over 2 * n_pos * n_neg.
    """
    scores, labels, n_pos = _check_binary(scores, labels)
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)  # average ranks: ties get half-credit
    rank_sum = float(ranks[labels == 1].sum())
    # 2*rank_sum is integral, so the numerator below is exact
    numerator = round(2.0 * rank_sum) - n_pos * (n_pos + 1)
    return numerator / (2 * n_pos * n_neg)


def roc_curve(scores, labels) -> RocCurve:
    scores, labels, n_pos = _check_binary(scores, labels)
    n_neg = len(labels) - n_pos
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    fpr, tpr = [0.0], [0.0]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:  # process tied scores as one block
            tp += l[j]
            fp += 1 - l[j]
            j += 1
        fpr.append(fp / n_neg)
        tpr.append(tp / n_pos)
        i = j
    return RocCurve(fpr=tuple(fpr), tpr=tuple(tpr))


def confusion_at_threshold(scores, labels, threshold: float) -> ConfusionMatrix:
    """Predict death iff score is strictly larger than the threshold."""
    if not (0.0 < threshold < 1.0):
        raise ParameterError("threshold must lie in (0, 1)")
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pred = scores > threshold
    pos = labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def f1_positive(cm: ConfusionMatrix) -> float:
    """f1 of the death class: 2tp / (2tp + fp + fn)."""
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    denom = 2 * cm.tp + cm.fp + cm.fn
    if denom == 0:
        return 0.0
    return 2 * cm.tp / denom


def f1_micro(cm: ConfusionMatrix) -> float:
    """Micro-averaged f1 over the two one-vs-rest classes.

    For a single binary task this is identically the accuracy (pooled TP of
    both classes over the total); kept as its own function because reports
    name it separately.
    """
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    # class 1 one-vs-rest: tp1=tp, fp1=fp, fn1=fn; class 0: tp0=tn, fp0=fn, fn0=fp
    pooled_tp = cm.tp + cm.tn
    pooled_fp = cm.fp + cm.fn
    pooled_fn = cm.fn + cm.fp
    return 2 * pooled_tp / (2 * pooled_tp + pooled_fp + pooled_fn)
