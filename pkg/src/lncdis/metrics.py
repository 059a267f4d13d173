"""Ranking and threshold metrics for binary scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(bool)


def _blocks(s, y):
    """Cumulative (TP, FP) at the end of each block of tied scores, highest scores first."""
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    return tp.astype(np.float64), fp.astype(np.float64)


def roc_auc(scores, labels):
    """Mann-Whitney AUC (ties count one half) and the ROC curve as (fpr, tpr) points."""
    s, y = _check(scores, labels)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC AUC needs both classes")
    ranks = rankdata(s)
    auc = (ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    tp, fp = _blocks(s, y)
    points = [(0.0, 0.0)] + list(zip((fp / n_neg).tolist(), (tp / n_pos).tolist()))
    return float(auc), points


def pr_auc(scores, labels):
    """Average precision and the PR curve as (recall, precision) points.

    Every positive is credited with the precision reached at the end of its
    block of tied scores, so ties never depend on input order.
    """
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("PR AUC needs at least one positive")
    tp, fp = _blocks(s, y)
    precision = tp / (tp + fp)
    gained = np.diff(np.r_[0.0, tp])
    aupr = float(np.sum(gained * precision) / n_pos)
    points = [(0.0, 1.0)] + list(zip((tp / n_pos).tolist(), precision.tolist()))
    return aupr, points


@dataclass(frozen=True)
class ThresholdMetrics:
    acc: float
    pre: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int
    degenerate: tuple[str, ...] = ()


def threshold_metrics(scores, labels, threshold: float = 0.5) -> ThresholdMetrics:
    s, y = _check(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    tn = int(np.sum(~pred & ~y))
    fn = int(np.sum(~pred & y))
    degenerate = []
    total = tp + fp + tn + fn
    acc = (tp + tn) / total if total else 0.0
    if tp + fp:
        pre = tp / (tp + fp)
    else:
        pre = 0.0
        degenerate.append("pre")
    if 2 * tp + fp + fn:
        f1 = 2 * tp / (2 * tp + fp + fn)
    else:
        f1 = 0.0
        degenerate.append("f1")
    return ThresholdMetrics(acc, pre, f1, tp, fp, tn, fn, tuple(degenerate))


@dataclass
class MetricsReport:
    auc: float
    aupr: float
    acc: float
    pre: float
    f1: float
    threshold: float = 0.5
    roc_points: list = field(default_factory=list, repr=False)
    pr_points: list = field(default_factory=list, repr=False)
    confusion: dict = field(default_factory=dict, repr=False)
    degenerate: tuple[str, ...] = ()

    FIELDS = ("auc", "aupr", "acc", "pre", "f1")

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


def evaluate(scores, labels, threshold: float = 0.5) -> MetricsReport:
    auc, roc = roc_auc(scores, labels)
    aupr, pr = pr_auc(scores, labels)
    tm = threshold_metrics(scores, labels, threshold)
    return MetricsReport(
        auc,
        aupr,
        tm.acc,
        tm.pre,
        tm.f1,
        threshold,
        roc,
        pr,
        {"tp": tm.tp, "fp": tm.fp, "tn": tm.tn, "fn": tm.fn},
        tm.degenerate,
    )


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    if not reports:
        raise ValueError("no reports to average")
    means = {f: float(np.mean([getattr(r, f) for r in reports])) for f in MetricsReport.FIELDS}
    return MetricsReport(threshold=reports[0].threshold, **means)
