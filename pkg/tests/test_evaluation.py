"""Metrics vs brute-force oracles, randomization test, cross-validation."""

import itertools
import math

import numpy as np
import pytest

from irflab.evaluation import (
    MetricResult,
    assign_folds,
    cross_validate_grid,
    evaluate_ranking,
    evaluate_rankings,
    fisher_randomization,
    grid_points,
)


def oracle_metric(ranking, relevant, metric):
    """Straight-from-definition implementations used as oracles."""
    if not relevant:
        return 0.0
    if metric == "map100":
        ap = 0.0
        hits = 0
        for k, pid in enumerate(ranking, start=1):
            if k > 100:
                break
            if pid in relevant:
                hits += 1
                ap += hits / k
        return ap / len(relevant)
    if metric == "ndcg20":
        dcg = 0.0
        for k, pid in enumerate(ranking, start=1):
            if k > 20:
                break
            if pid in relevant:
                dcg += 1.0 / math.log2(k + 1)
        ideal = sum(1.0 / math.log2(k + 1) for k in range(1, min(len(relevant), 20) + 1))
        return dcg / ideal
    if metric == "p1":
        return 1.0 if ranking and ranking[0] in relevant else 0.0
    if metric == "mrr":
        for k, pid in enumerate(ranking, start=1):
            if pid in relevant:
                return 1.0 / k
        return 0.0
    raise ValueError(metric)


class TestEvaluateRanking:
    def test_ap_hand_example(self):
        # [R, N, R] with 2 relevant: (1/1 + 2/3) / 2
        val = evaluate_ranking(["r1", "n1", "r2"], {"r1", "r2"}, "map100")
        assert val == pytest.approx((1.0 + 2 / 3) / 2, abs=1e-9)

    def test_ideal_ranking_scores_one_everywhere(self):
        ranking = [f"r{i}" for i in range(5)] + [f"n{i}" for i in range(5)]
        relevant = {f"r{i}" for i in range(5)}
        for metric in ("map100", "ndcg20", "p1", "mrr"):
            assert evaluate_ranking(ranking, relevant, metric) == pytest.approx(1.0)

    def test_relevant_at_rank_101_does_not_count_for_map(self):
        ranking = [f"n{i}" for i in range(100)] + ["r1"]
        assert evaluate_ranking(ranking, {"r1"}, "map100") == 0.0
        # but mrr has no cutoff
        assert evaluate_ranking(ranking, {"r1"}, "mrr") == pytest.approx(1 / 101)

    def test_empty_relevant_warns_and_returns_zero(self, caplog):
        with caplog.at_level("WARNING"):
            assert evaluate_ranking(["a"], set(), "map100") == 0.0
        assert any("empty relevant" in r.message for r in caplog.records)

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            evaluate_ranking(["a"], {"a"}, "recall5")

    def test_matches_oracle_on_random_rankings(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 60))
            ranking = [f"p{i}" for i in range(n)]
            rng.shuffle(ranking)
            relevant = {f"p{i}" for i in range(n) if rng.random() < 0.3}
            if not relevant:
                relevant = {"p0"}
            for metric in ("map100", "ndcg20", "p1", "mrr"):
                assert evaluate_ranking(ranking, relevant, metric) == pytest.approx(
                    oracle_metric(ranking, relevant, metric), abs=1e-9
                )

    def test_map_improves_when_relevant_swapped_upward(self, rng):
        for _ in range(50):
            n = 30
            ranking = [f"p{i}" for i in range(n)]
            relevant = {f"p{i}" for i in range(n) if rng.random() < 0.25} or {"p5"}
            base = evaluate_ranking(ranking, relevant, "map100")
            idxs = [i for i in range(1, n) if ranking[i] in relevant and ranking[i - 1] not in relevant]
            if not idxs:
                continue
            i = idxs[int(rng.integers(len(idxs)))]
            swapped = list(ranking)
            swapped[i - 1], swapped[i] = swapped[i], swapped[i - 1]
            assert evaluate_ranking(swapped, relevant, "map100") > base


class TestMetricResult:
    def test_mean_is_arithmetic_mean(self):
        res = MetricResult.aggregate("map100", {"q1": 0.2, "q2": 0.4})
        assert res.mean == pytest.approx(0.3)

    def test_evaluate_rankings_maps_topics(self):
        res = evaluate_rankings(
            {"q1": ["a", "b"], "q2": ["c"]},
            {"q1": {"a"}, "q2": {"x"}},
            "p1",
        )
        assert res.per_query == {"q1": 1.0, "q2": 0.0}


class TestFisherRandomization:
    def test_identical_inputs_give_exactly_one(self):
        a = {"q1": 0.3, "q2": 0.5, "q3": 0.7}
        assert fisher_randomization(a, dict(a)) == 1.0

    def test_three_unit_differences_exhaustive(self):
        a = {"q1": 1.0, "q2": 1.0, "q3": 1.0}
        b = {"q1": 0.0, "q2": 0.0, "q3": 0.0}
        # only +++ and --- reach |mean| = 1 among the 8 assignments
        assert fisher_randomization(a, b) == pytest.approx(0.25)

    def test_exhaustive_matches_direct_enumeration(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 9))
            d = rng.normal(size=n)
            a = {f"q{i}": float(d[i]) for i in range(n)}
            b = {f"q{i}": 0.0 for i in range(n)}
            obs = abs(d.mean()) - 1e-12
            count = sum(
                1 for signs in itertools.product((-1, 1), repeat=n)
                if abs(np.dot(signs, d) / n) >= obs
            )
            assert fisher_randomization(a, b) == pytest.approx(count / 2**n, abs=1e-12)

    def test_monte_carlo_close_to_exhaustive(self, rng):
        for trial in range(5):
            n = int(rng.integers(4, 10))
            d = rng.normal(size=n)
            a = {f"q{i}": float(d[i]) for i in range(n)}
            b = {f"q{i}": 0.0 for i in range(n)}
            exact = fisher_randomization(a, b, method="exhaustive")
            mc = fisher_randomization(a, b, permutations=100_000, seed=17 + trial, method="sampled")
            assert mc == pytest.approx(exact, abs=0.01)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="unknown method"):
            fisher_randomization({"q": 1.0}, {"q": 0.0}, method="bootstrap")

    def test_misaligned_topics_rejected(self):
        with pytest.raises(ValueError, match="topic sets"):
            fisher_randomization({"q1": 1.0}, {"q2": 1.0})

    def test_monte_carlo_path_in_unit_range(self, rng):
        n = 25  # above the exhaustive limit
        a = {f"q{i}": float(rng.random()) for i in range(n)}
        b = {f"q{i}": float(rng.random()) for i in range(n)}
        p = fisher_randomization(a, b, permutations=20_000, seed=3)
        assert 0.0 < p <= 1.0


class TestCrossValidation:
    def test_grid_points_deterministic_order(self):
        pts = grid_points({"b": [1, 2], "a": [10]})
        assert pts == [{"a": 10, "b": 1}, {"a": 10, "b": 2}]

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            grid_points({})
        with pytest.raises(ValueError):
            grid_points({"a": []})

    def test_fold_assignment_seeded(self):
        ids = [f"q{i}" for i in range(11)]
        a = assign_folds(ids, 5, seed=2)
        b = assign_folds(ids, 5, seed=2)
        assert a == b
        assert sorted(q for fold in a for q in fold) == sorted(ids)

    def test_too_few_queries_rejected(self):
        with pytest.raises(ValueError):
            assign_folds(["q1", "q2"], 5, seed=0)

    def test_single_grid_point_always_chosen(self):
        ids = [f"q{i}" for i in range(10)]
        def evaluate(params):
            return {q: 0.5 for q in ids}
        chosen, scores = cross_validate_grid(ids, {"mu": [300]}, evaluate, folds=5, seed=0)
        assert chosen == [{"mu": 300}] * 5
        assert scores == {q: 0.5 for q in ids}

    def test_best_point_wins_on_held_out_data(self):
        ids = [f"q{i}" for i in range(10)]
        def evaluate(params):
            # mu=500 uniformly better
            return {q: (0.9 if params["mu"] == 500 else 0.1) for q in ids}
        chosen, scores = cross_validate_grid(ids, {"mu": [300, 500]}, evaluate, folds=5, seed=1)
        assert all(c == {"mu": 500} for c in chosen)
        assert all(v == 0.9 for v in scores.values())

    def test_same_seed_reproducible(self):
        ids = [f"q{i}" for i in range(12)]
        rng = np.random.default_rng(5)
        table = {q: {m: float(rng.random()) for m in (1, 2, 3)} for q in ids}
        def evaluate(params):
            return {q: table[q][params["m"]] for q in ids}
        a = cross_validate_grid(ids, {"m": [1, 2, 3]}, evaluate, folds=4, seed=7)
        b = cross_validate_grid(ids, {"m": [1, 2, 3]}, evaluate, folds=4, seed=7)
        assert a == b
