"""Ranking metrics for binary detection scores.

Scores follow the convention "higher = more likely positive (misclassified
or out-of-distribution)".
"""

import numpy as np

from ..validation import check_binary_labels


def _ranks_with_ties(values):
    """1-based ranks, ties sharing the average of their rank range."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels):
    """Mann-Whitney AUROC with average ranks for ties.

    Equals the probability that a random positive outscores a random
    negative, counting ties as one half; identical to the trapezoidal area
    under the tie-grouped ROC curve.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels, n=len(scores))
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs both a positive and a negative sample")
    ranks = _ranks_with_ties(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def tnr_at_tpr(scores, labels, tpr=0.95):
    """True-negative rate at the loosest threshold keeping TPR >= target.

    The threshold is the smallest positive score that must still be admitted
    to reach the target TPR (positives count with >=); the TNR is the
    fraction of negatives strictly below it.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels, n=len(scores))
    pos = np.sort(scores[labels == 1])[::-1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("tnr_at_tpr needs both a positive and a negative sample")
    for k in range(1, len(pos) + 1):
        if k / len(pos) >= tpr:
            threshold = pos[k - 1]
            break
    return float(np.mean(neg < threshold))


def roc_points(scores, labels):
    """(fpr, tpr) points of the ROC curve, grouped by unique score.

    Points run from (0,0) to (1,1) with FPR non-decreasing; trapezoidal
    integration over them reproduces :func:`auroc` exactly.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels, n=len(scores))
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp += int(sorted_labels[i : j + 1].sum())
        fp += (j - i + 1) - int(sorted_labels[i : j + 1].sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j + 1
    return points
