"""Exact, tie-aware rank metrics and mean/STD aggregation.

AUROC is the Mann-Whitney statistic (ties credit 1/2), computed through
average ranks in O(m log m) but exactly equal to the pairwise definition.
AUCPR is average precision under the step rule, with tied scores processed
as atomic threshold blocks so sort stability can never matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError


@dataclass(frozen=True)
class EvalResult:
    """One split's metrics plus the test-class composition behind them."""

    auroc: float
    aucpr: float
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class SummaryStats:
    """Mean and sample STD (divisor n-1) of repeated measurements.

    With a single value the STD is reported as 0.0 and ``std_defined``
    is False.
    """

    mean: float
    std: float
    n: int
    std_defined: bool


def _check_scores_labels(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise ValidationError("scores and labels must be 1-D vectors of equal length")
    if not np.isfinite(s).all():
        raise ValidationError("scores must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    y = y.astype(np.int64)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "metric undefined: need both classes, got %d positives / %d negatives"
            % (n_pos, n_neg)
        )
    return s, y, n_pos, n_neg


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, tied values all receive the group's mean rank."""
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    boundaries = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    stops = np.concatenate((boundaries, [scores.size]))
    ranks = np.empty(scores.size, dtype=np.float64)
    for lo, hi in zip(starts, stops):
        ranks[order[lo:hi]] = 0.5 * (lo + 1 + hi)
    return ranks


def auroc(scores, labels) -> float:
    """P(score_pos > score_neg) over all positive/negative pairs, ties 1/2."""
    s, y, n_pos, n_neg = _check_scores_labels(scores, labels)
    ranks = _average_ranks(s)
    rank_sum = ranks[y == 1].sum()
    u_stat = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def aucpr(scores, labels) -> float:
    """Average precision with the step rule over tied-score blocks."""
    s, y, n_pos, _ = _check_scores_labels(scores, labels)
    order = np.argsort(-s, kind="stable")
    s_desc = s[order]
    y_desc = y[order]
    block_ends = np.flatnonzero(s_desc[:-1] != s_desc[1:])
    block_ends = np.concatenate((block_ends, [s.size - 1]))
    tp = np.cumsum(y_desc)[block_ends].astype(np.float64)
    total = (block_ends + 1).astype(np.float64)
    precision = tp / total
    recall = tp / n_pos
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * precision))


def evaluate(scores, labels) -> EvalResult:
    """Both metrics plus the class counts for one scored split."""
    _, y, n_pos, n_neg = _check_scores_labels(scores, labels)
    return EvalResult(auroc=auroc(scores, labels), aucpr=aucpr(scores, labels),
                      n_pos=n_pos, n_neg=n_neg)


def summarize(values, population: bool = False) -> SummaryStats:
    """Mean and STD of repeated metric values.

    Sample STD (divisor n-1) by default, matching mean+/-STD reporting over
    reshuffles; ``population=True`` switches to divisor n.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ValidationError("need a non-empty 1-D list of values")
    if not np.isfinite(vals).all():
        raise ValidationError("values must be finite")
    n = int(vals.size)
    mean = float(vals.mean())
    if n == 1 and not population:
        return SummaryStats(mean=mean, std=0.0, n=1, std_defined=False)
    divisor = n if population else n - 1
    var = float(np.sum((vals - mean) ** 2) / divisor)
    return SummaryStats(mean=mean, std=math.sqrt(var), n=n, std_defined=True)
