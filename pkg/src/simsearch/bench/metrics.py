"""Effectiveness and efficiency metrics with confidence-interval aggregation.

Positions come from the cached exact ranking.  Among equidistant objects the
one with the smaller id counts as closer, so pos(o_i) >= i for results that
obey the same tie rule.  Positions beyond the cached depth are clamped to
depth+1 (the cache depth bounds rank-metric accuracy).
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .gold import GoldStandard, QueryType

Z95 = 1.96


@dataclass
class QueryEffectiveness:
    recall: float
    num_closer: float | None
    rel_pos_error: float | None     # geometric mean over returned positions
    class_accuracy: float
    clamped: bool                   # some position exceeded the cached depth


def _position(gold_pairs: list[tuple[float, int]], dist: float,
              obj_id: int, depth: int) -> tuple[int, bool]:
    """1-based exact rank of (dist, id), clamped to depth+1 past the cache."""
    pos = bisect_left(gold_pairs, (dist, obj_id)) + 1
    if pos > depth:
        return depth + 1, True
    return pos, False


def effectiveness(results: list[tuple[float, int, int]], gold: np.ndarray,
                  query_type: QueryType, query_label: int) -> QueryEffectiveness:
    """Per-query effectiveness against the exact ranking.

    ``results`` are (distance, id, label) sorted ascending; ``gold`` is the
    cached exact ranking (ENTRY_DTYPE).
    """
    if query_type.kind == "knn":
        answer_size = min(int(query_type.value), len(gold))
    else:
        answer_size = int(np.searchsorted(gold["dist"], query_type.value,
                                          side="right"))
    gold_answer = set(int(i) for i in gold["id"][:answer_size])
    returned = set(i for _, i, _ in results)
    recall = (len(returned & gold_answer) / answer_size if answer_size
              else 1.0)

    gold_pairs = [(float(d), int(i)) for d, i in zip(gold["dist"], gold["id"])]
    depth = len(gold_pairs)
    num_closer = None
    rel_pos_error = None
    clamped = False
    if results:
        first_pos, c0 = _position(gold_pairs, results[0][0], results[0][1], depth)
        num_closer = float(first_pos - 1)
        log_sum = 0.0
        for rank, (d, obj_id, _) in enumerate(results, start=1):
            pos, c = _position(gold_pairs, d, obj_id, depth)
            clamped = clamped or c
            log_sum += math.log(pos / rank)
        clamped = clamped or c0
        rel_pos_error = math.exp(log_sum / len(results))

    class_accuracy = 0.0
    if query_label >= 0 and results:
        votes: dict[int, int] = {}
        for _, _, label in results:
            if label >= 0:
                votes[label] = votes.get(label, 0) + 1
        if votes:
            best = max(votes.values())
            predicted = min(lab for lab, cnt in votes.items() if cnt == best)
            class_accuracy = 1.0 if predicted == query_label else 0.0
    return QueryEffectiveness(recall, num_closer, rel_pos_error,
                              class_accuracy, clamped)


# -- aggregation across bootstrap splits ----------------------------------------

def _point(mean: float) -> tuple[float, float, float]:
    return mean, mean, mean


def aggregate_fixed_effect(split_samples: list[np.ndarray]) -> tuple[float, float, float]:
    """Inverse-variance pooling of split means (meta-analysis fixed effect).

    Used for query time and distance computations, whose per-query samples
    give each split a standard error.
    """
    means = np.asarray([float(np.mean(s)) for s in split_samples])
    if len(means) == 1:
        return _point(means[0])
    variances = np.asarray([float(np.var(s, ddof=1)) / len(s) if len(s) > 1 else 0.0
                            for s in split_samples])
    if np.any(variances <= 0):
        if np.all(variances <= 0):
            mean = float(np.mean(means))
            if np.allclose(means, means[0]):
                return _point(mean)
            return aggregate_mean_of_means(list(means))
        variances = np.maximum(variances, variances[variances > 0].min())
    weights = 1.0 / variances
    mean = float((weights * means).sum() / weights.sum())
    se = math.sqrt(1.0 / weights.sum())
    return mean, mean - Z95 * se, mean + Z95 * se


def aggregate_mean_of_means(split_means: list[float]) -> tuple[float, float, float]:
    """Arithmetic mean of split means; CI from the sample variance over them."""
    means = np.asarray([m for m in split_means if m is not None], dtype=np.float64)
    if len(means) == 0:
        return 0.0, 0.0, 0.0
    mean = float(means.mean())
    if len(means) == 1:
        return _point(mean)
    se = math.sqrt(float(np.var(means, ddof=1)) / len(means))
    return mean, mean - Z95 * se, mean + Z95 * se


def aggregate_geometric(split_means: list[float]) -> tuple[float, float, float]:
    """Geometric mean of split values; CI computed in the log domain."""
    vals = np.asarray([m for m in split_means if m is not None and m > 0],
                      dtype=np.float64)
    if len(vals) == 0:
        return 0.0, 0.0, 0.0
    logs = np.log(vals)
    mean = float(np.exp(logs.mean()))
    if len(vals) == 1:
        return _point(mean)
    se = math.sqrt(float(np.var(logs, ddof=1)) / len(logs))
    return mean, float(np.exp(logs.mean() - Z95 * se)), float(np.exp(logs.mean() + Z95 * se))
