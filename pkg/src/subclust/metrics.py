"""Clustering quality metrics: permutation-matched accuracy, normalized
mutual information, and pair-counting F1."""

from dataclasses import dataclass

import numpy as np

from subclust.linalg import optimal_assignment


@dataclass
class MetricsReport:
    acc: float
    nmi: float
    f1: float

    def as_dict(self):
        return {"acc": self.acc, "nmi": self.nmi, "f1": self.f1}


def _check(truth, pred):
    truth = np.asarray(truth, dtype=int)
    pred = np.asarray(pred, dtype=int)
    if truth.shape != pred.shape:
        raise ValueError("label sequences must have equal length")
    return truth, pred


def _contingency(truth, pred):
    k = max(truth.max(), pred.max()) + 1
    table = np.zeros((k, k), dtype=np.int64)
    np.add.at(table, (truth, pred), 1)
    return table


def acc(truth, pred):
    """Best-permutation agreement rate, via optimal assignment on the
    negated confusion matrix."""
    truth, pred = _check(truth, pred)
    table = _contingency(truth, pred)
    perm = optimal_assignment(-table.astype(float))
    matched = sum(table[i, perm[i]] for i in range(table.shape[0]))
    return float(matched) / truth.shape[0]


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred):
    """Mutual information normalized by sqrt(H(truth) * H(pred)); 0/0 -> 0."""
    truth, pred = _check(truth, pred)
    n = truth.shape[0]
    table = _contingency(truth, pred)
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    mi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij > 0:
                mi += (nij / n) * np.log(n * nij / (rows[i] * cols[j]))
    denom = np.sqrt(_entropy(rows, n) * _entropy(cols, n))
    return float(mi / denom) if denom > 0 else 0.0


def f1_pairwise(truth, pred):
    """Pair-counting F1 over all unordered point pairs."""
    truth, pred = _check(truth, pred)
    table = _contingency(truth, pred)

    def pairs(v):
        return float(np.sum(v * (v - 1) // 2))

    tp = pairs(table)
    same_pred = pairs(table.sum(axis=0))
    same_truth = pairs(table.sum(axis=1))
    fp = same_pred - tp
    fn = same_truth - tp
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def score(truth, pred):
    return MetricsReport(acc=acc(truth, pred), nmi=nmi(truth, pred), f1=f1_pairwise(truth, pred))
