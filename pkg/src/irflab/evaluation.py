"""Ranking metrics, the Fisher randomization test, and cross-validated grid
search.

Metrics follow trec_eval conventions: average precision at cutoff 100 keeps
the full relevant count in the denominator; NDCG@20 uses binary gains with a
1/log2(rank+1) discount; P@1 and MRR are over the whole list.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import AbstractSet, Callable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

METRICS = ("map100", "ndcg20", "p1", "mrr")
SIGNIFICANCE_THRESHOLD = 0.05
EXHAUSTIVE_LIMIT = 20  # enumerate all sign assignments up to this many topics
DEFAULT_PERMUTATIONS = 100_000


def evaluate_ranking(ranking: Sequence[str], relevant: AbstractSet[str], metric: str) -> float:
    """Score one duplicate-free ranking against a relevant set."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if not relevant:
        logger.warning("empty relevant set; %s = 0", metric)
        return 0.0
    if metric == "map100":
        hits = 0
        total = 0.0
        for k, pid in enumerate(ranking[:100], start=1):
            if pid in relevant:
                hits += 1
                total += hits / k
        return total / len(relevant)
    if metric == "ndcg20":
        dcg = sum(
            1.0 / np.log2(k + 1)
            for k, pid in enumerate(ranking[:20], start=1)
            if pid in relevant
        )
        ideal = sum(1.0 / np.log2(k + 1) for k in range(1, min(len(relevant), 20) + 1))
        return float(dcg / ideal)
    if metric == "p1":
        return 1.0 if ranking and ranking[0] in relevant else 0.0
    for k, pid in enumerate(ranking, start=1):
        if pid in relevant:
            return 1.0 / k
    return 0.0


@dataclass(frozen=True)
class MetricResult:
    metric_name: str
    per_query: dict[str, float]
    mean: float

    @classmethod
    def aggregate(cls, metric_name: str, per_query: Mapping[str, float]) -> "MetricResult":
        per_query = dict(per_query)
        mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
        return cls(metric_name=metric_name, per_query=per_query, mean=mean)


def evaluate_rankings(
    rankings: Mapping[str, Sequence[str]],
    relevant_by_topic: Mapping[str, AbstractSet[str]],
    metric: str,
) -> MetricResult:
    per_query = {
        topic: evaluate_ranking(ranking, relevant_by_topic.get(topic, frozenset()), metric)
        for topic, ranking in rankings.items()
    }
    return MetricResult.aggregate(metric, per_query)


def fisher_randomization(
    a: Mapping[str, float],
    b: Mapping[str, float],
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    method: str = "auto",
) -> float:
    """Two-sided paired sign-flip test on per-topic differences.

    method "auto" enumerates all 2^n assignments when n <= 20 and samples
    otherwise; "exhaustive" / "sampled" force one path. The sampled estimate
    counts the identity assignment alongside the samples.
    """
    if set(a) != set(b):
        raise ValueError("topic sets of the two systems differ")
    if not a:
        raise ValueError("no topics to compare")
    if method not in ("auto", "exhaustive", "sampled"):
        raise ValueError(f"unknown method {method!r}")
    topics = sorted(a)
    d = np.array([a[t] - b[t] for t in topics], dtype=np.float64)
    if method == "exhaustive" or (method == "auto" and len(d) <= EXHAUSTIVE_LIMIT):
        return _exhaustive_p(d)
    return _sampled_p(d, permutations, seed)


def _threshold(d: np.ndarray) -> float:
    # tiny slack keeps the identity assignment counted despite summation-order
    # rounding between mean() and the matrix products used for the flips
    return abs(d.mean()) - 1e-12


def _exhaustive_p(d: np.ndarray) -> float:
    n = len(d)
    if n > 30:
        raise ValueError(f"exhaustive enumeration over {n} topics is infeasible")
    threshold = _threshold(d)
    count = 0
    total = 1 << n
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)) & 1
        signs = bits.astype(np.float64) * 2.0 - 1.0
        means = signs @ d / n
        count += int((np.abs(means) >= threshold).sum())
    return count / total


def _sampled_p(d: np.ndarray, permutations: int, seed: int) -> float:
    n = len(d)
    threshold = _threshold(d)
    rng = np.random.default_rng(seed)
    count = 0
    remaining = permutations
    while remaining > 0:
        block = min(remaining, 20_000)
        signs = rng.integers(0, 2, size=(block, n)).astype(np.float64) * 2.0 - 1.0
        means = signs @ d / n
        count += int((np.abs(means) >= threshold).sum())
        remaining -= block
    return (count + 1) / (permutations + 1)


def grid_points(grid: Mapping[str, Sequence]) -> list[dict]:
    """Cartesian product of the grid in deterministic (sorted-name) order."""
    if not grid:
        raise ValueError("empty parameter grid")
    names = sorted(grid)
    for name in names:
        if not grid[name]:
            raise ValueError(f"grid for {name!r} has no values")
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def assign_folds(query_ids: Sequence[str], folds: int, seed: int) -> list[list[str]]:
    if len(query_ids) < folds:
        raise ValueError(f"need at least {folds} queries for {folds}-fold cross-validation")
    rng = np.random.default_rng(seed)
    ids = sorted(query_ids)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    return [list(part) for part in np.array_split(shuffled, folds)]


def cross_validate_grid(
    query_ids: Sequence[str],
    grid: Mapping[str, Sequence],
    evaluate: Callable[[dict], Mapping[str, float]],
    folds: int = 5,
    seed: int = 0,
) -> tuple[list[dict], dict[str, float]]:
    """Seeded k-fold grid search.

    ``evaluate(params)`` must return per-query scores for every query. Each
    fold picks the grid point with the best mean score on the other folds
    (first point wins ties) and is scored on its held-out queries.
    Returns (chosen params per fold, concatenated held-out scores).
    """
    points = grid_points(grid)
    fold_sets = assign_folds(query_ids, folds, seed)
    cache = [dict(evaluate(point)) for point in points]
    chosen: list[dict] = []
    test_scores: dict[str, float] = {}
    for fold in fold_sets:
        held_out = set(fold)
        best_i = 0
        best_score = -np.inf
        for i, scores in enumerate(cache):
            train = [s for q, s in scores.items() if q not in held_out]
            mean = sum(train) / len(train) if train else -np.inf
            if mean > best_score:
                best_score = mean
                best_i = i
        chosen.append(points[best_i])
        for q in fold:
            test_scores[q] = cache[best_i][q]
    return chosen, test_scores
