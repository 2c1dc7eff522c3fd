"""QL / BM25 / Rocchio scoring against brute-force oracles."""

import math

import pytest

from irflab.index import build_index, tfidf_vector
from irflab.retrieval import (
    RankedList,
    RetrievalParams,
    MU_GRID,
    K1_GRID,
    rank_bm25,
    rank_ql,
    rank_rocchio,
    read_run,
    write_run,
)

from conftest import make_collection, make_query, random_token_lists


def brute_ql_score(query_model, tokens, index, mu):
    """Oracle: direct evaluation of the smoothed KL scoring formula."""
    counts = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    score = 0.0
    for term, w in query_model.items():
        cf = index.collection_frequency.get(term, 0)
        if cf == 0:
            continue
        p_c = cf / index.total_tokens
        score += w * math.log((counts.get(term, 0) + mu * p_c) / (len(tokens) + mu))
    return score


def brute_bm25_score(qtokens, tokens, index, k1, b):
    counts = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    n = index.passage_count
    score = 0.0
    for term in qtokens:
        df = index.document_frequency.get(term, 0)
        if df == 0:
            continue
        idf = max(0.0, math.log((n - df + 0.5) / (df + 0.5)))
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(tokens) / index.avg_doc_len))
    return score


class TestRankQL:
    def test_single_doc_hand_computation(self):
        coll = make_collection([["a", "b"]])
        idx = build_index(coll)
        ranked = rank_ql({"a": 1.0}, idx, RetrievalParams(mu=1.0), depth=1)
        assert ranked.entries[0][1] == pytest.approx(math.log(0.5), abs=1e-9)

    def test_unseen_term_skipped_scores_unaffected(self, caplog):
        coll = make_collection([["a", "b"], ["a", "a"]])
        idx = build_index(coll)
        params = RetrievalParams(mu=10.0)
        base = rank_ql({"a": 1.0}, idx, params, depth=2)
        with caplog.at_level("WARNING"):
            with_unseen = rank_ql({"a": 1.0, "zeta": 0.3}, idx, params, depth=2)
        assert with_unseen.entries == base.entries
        assert any("unseen" in r.message for r in caplog.records)

    def test_mu_grid_matches_protocol(self):
        assert MU_GRID == (30.0, 50.0, 300.0, 500.0, 1000.0, 1500.0)

    def test_against_oracle_on_random_corpora(self, rng):
        for _ in range(10):
            lists = random_token_lists(rng, 15, 8)
            coll = make_collection(lists)
            idx = build_index(coll)
            terms = sorted({t for l in lists for t in l})[:4]
            w = rng.random(len(terms))
            model = dict(zip(terms, (w / w.sum()).tolist()))
            mu = float(rng.uniform(0.5, 50))
            ranked = rank_ql(model, idx, RetrievalParams(mu=mu), depth=len(coll))
            for pid, score in ranked.entries:
                assert score == pytest.approx(brute_ql_score(model, coll[pid].tokens, idx, mu), abs=1e-9)

    def test_exclusion(self):
        coll = make_collection([["a"], ["a"], ["a", "a"]])
        idx = build_index(coll)
        ranked = rank_ql({"a": 1.0}, idx, RetrievalParams(mu=1.0), depth=3, exclude={"p002"})
        assert "p002" not in ranked.ids()

    def test_empty_model_rejected(self, tiny_index):
        _, idx = tiny_index
        with pytest.raises(ValueError):
            rank_ql({}, idx, RetrievalParams(), depth=1)

    def test_one_term_mle_order_matches_smoothed_probability(self, rng):
        for _ in range(10):
            lists = random_token_lists(rng, 12, 6)
            coll = make_collection(lists)
            idx = build_index(coll)
            term = max(idx.collection_frequency, key=lambda t: idx.collection_frequency[t])
            mu = 7.0
            ranked = rank_ql({term: 1.0}, idx, RetrievalParams(mu=mu), depth=len(coll))
            p_c = idx.collection_frequency[term] / idx.total_tokens
            probs = []
            for pid, _ in ranked.entries:
                toks = coll[pid].tokens
                tf = sum(1 for t in toks if t == term)
                probs.append((tf + mu * p_c) / (len(toks) + mu))
            assert all(probs[i] >= probs[i + 1] - 1e-12 for i in range(len(probs) - 1))


class TestRankBM25:
    def test_default_b(self):
        assert RetrievalParams().b == 0.75
        assert K1_GRID == (1.2, 1.4, 1.6, 1.8, 2.0)

    def test_common_term_clamped_to_zero(self):
        coll = make_collection([["a", "b"], ["a", "c"], ["a", "d"]])
        idx = build_index(coll)
        # df(a) = 3 = N: idf = max(0, ln(0.5/3.5)) = 0, so "a" contributes nothing.
        ranked = rank_bm25(make_query(["a"]), idx, RetrievalParams(), depth=3)
        assert all(score == 0.0 for _, score in ranked.entries)

    def test_single_doc_matches_oracle(self):
        coll = make_collection([["a", "a"]])
        idx = build_index(coll)
        params = RetrievalParams(k1=1.2, b=0.75)
        ranked = rank_bm25(make_query(["a"]), idx, params, depth=1)
        expected = brute_bm25_score(["a"], ["a", "a"], idx, 1.2, 0.75)
        assert ranked.entries[0][1] == pytest.approx(expected, abs=1e-12)

    def test_against_oracle_on_random_corpora(self, rng):
        for _ in range(10):
            lists = random_token_lists(rng, 15, 8)
            coll = make_collection(lists)
            idx = build_index(coll)
            qtokens = [f"t{int(i)}" for i in rng.integers(0, 8, size=3)]
            params = RetrievalParams(k1=float(rng.uniform(1.2, 2.0)), b=0.75)
            ranked = rank_bm25(make_query(qtokens), idx, params, depth=len(coll))
            for pid, score in ranked.entries:
                expected = brute_bm25_score(qtokens, coll[pid].tokens, idx, params.k1, params.b)
                assert score == pytest.approx(expected, abs=1e-9)

    def test_empty_query_rejected(self, tiny_index):
        _, idx = tiny_index
        with pytest.raises(ValueError):
            rank_bm25(make_query([]), idx, RetrievalParams(), depth=1)


class TestRankRocchio:
    def test_all_zero_vector_ranks_by_tie_break(self):
        coll = make_collection([["b"], ["a"], ["c"]])
        idx = build_index(coll)
        ranked = rank_rocchio({"a": 0.0}, idx, depth=3)
        assert ranked.ids() == ("p000", "p001", "p002")
        assert all(score == 0.0 for _, score in ranked.entries)

    def test_orthogonal_vocabulary_scores_zero(self):
        coll = make_collection([["x", "y"]])
        idx = build_index(coll)
        ranked = rank_rocchio({"z": 2.0}, idx, depth=1)
        assert ranked.entries[0][1] == 0.0

    def test_inner_product_matches_brute_force(self, rng):
        lists = [["a", "a", "b"], ["b", "c"], ["a", "c", "c"]]
        coll = make_collection(lists)
        idx = build_index(coll)
        qvec = {"a": 0.5, "c": 1.5}
        ranked = rank_rocchio(qvec, idx, depth=3)
        for pid, score in ranked.entries:
            doc_vec = tfidf_vector(coll[pid], idx)
            expected = sum(qvec.get(t, 0.0) * w for t, w in doc_vec.items())
            assert score == pytest.approx(expected, abs=1e-12)

    def test_empty_vector_rejected(self, tiny_index):
        _, idx = tiny_index
        with pytest.raises(ValueError):
            rank_rocchio({}, idx, depth=1)


class TestDeterminismAndExclusion:
    def test_permutation_stability(self, rng):
        lists = random_token_lists(rng, 20, 6)
        coll = make_collection(lists)
        idx = build_index(coll)
        model = {"t0": 0.6, "t1": 0.4}
        a = rank_ql(model, idx, RetrievalParams(), depth=20)
        b = rank_ql(model, idx, RetrievalParams(), depth=20)
        assert a.entries == b.entries

    def test_ties_break_by_ascending_passage_id(self):
        coll = make_collection([["z"], ["z"], ["z"]])
        idx = build_index(coll)
        ranked = rank_ql({"z": 1.0}, idx, RetrievalParams(), depth=3)
        assert ranked.ids() == ("p000", "p001", "p002")

    def test_excluded_never_appear(self, rng):
        for _ in range(20):
            lists = random_token_lists(rng, 25, 6)
            coll = make_collection(lists)
            idx = build_index(coll)
            ids = list(coll.ids)
            excluded = {ids[int(i)] for i in rng.choice(len(ids), size=7, replace=False)}
            ranked = rank_ql({"t0": 1.0}, idx, RetrievalParams(), depth=25, exclude=excluded)
            assert not excluded & set(ranked.ids())
            assert len(ranked) == 25 - len(excluded)


class TestRunFiles:
    def test_round_trip(self, tmp_path):
        lists = [
            RankedList(query_id="q1", entries=(("p2", 1.5), ("p1", 0.5))),
            RankedList(query_id="q2", entries=(("p1", 2.0),)),
        ]
        path = tmp_path / "run.txt"
        write_run(path, lists, tag="tagx")
        text = path.read_text().splitlines()
        assert text[0].split() == ["q1", "Q0", "p2", "1", "1.500000", "tagx"]
        run = read_run(path)
        assert [pid for pid, _ in run["q1"]] == ["p2", "p1"]
        assert run["q2"][0][1] == pytest.approx(2.0)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("q1 Q0 p1 1 0.5\n")
        with pytest.raises(ValueError, match="6 fields"):
            read_run(path)
