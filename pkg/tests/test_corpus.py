"""Tokenization, ingestion, segmentation, and qrels parsing."""

import json

import pytest

from irflab.corpus import (
    TokenizerConfig,
    ingest_corpus,
    load_qrels,
    load_queries,
    segment_document,
    split_sentences,
    tokenize,
    write_corpus,
)


class TestTokenize:
    def test_stopword_removal_and_s_stemming(self):
        cfg = TokenizerConfig(stopwords=frozenset({"the"}), stemming="s")
        assert tokenize("The cats ran", cfg) == ["cat", "ran"]

    def test_lowercase_identity_without_stemming(self):
        cfg = TokenizerConfig(stopwords=frozenset(), stemming="none")
        assert tokenize("A A a", cfg) == ["a", "a", "a"]

    def test_embedding_config_does_not_stem(self):
        cfg = TokenizerConfig.embedding()
        assert cfg.stemming == "none"
        assert tokenize("cats dogs houses", cfg) == ["cats", "dogs", "houses"]

    def test_empty_input(self):
        assert tokenize("", TokenizerConfig()) == []

    def test_punctuation_delimits_words(self):
        cfg = TokenizerConfig.none()
        assert tokenize("one,two;three.four", cfg) == ["one", "two", "three", "four"]

    def test_s_stemmer_guards(self):
        cfg = TokenizerConfig(stopwords=frozenset(), stemming="s")
        assert tokenize("glass bus stories churches", cfg) == ["glass", "bus", "story", "churche"]

    def test_porter_style_reduces_suffixes(self):
        cfg = TokenizerConfig(stopwords=frozenset(), stemming="porter")
        assert tokenize("running jumped nationalization", cfg) == ["runn", "jump", "nationalize"]

    def test_deterministic_and_idempotent_when_unstemmed(self, rng):
        cfg = TokenizerConfig.none()
        words = ["alpha", "beta2", "gamma", "x9"]
        for _ in range(50):
            text = " ".join(words[int(i)] for i in rng.integers(0, len(words), size=8))
            once = tokenize(text, cfg)
            assert tokenize(text, cfg) == once
            assert tokenize(" ".join(once), cfg) == once

    def test_unknown_stemmer_rejected(self):
        with pytest.raises(ValueError):
            TokenizerConfig(stemming="snowball")


class TestIngest:
    def _write(self, path, rows):
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")

    def test_two_line_file(self, tmp_path, plain_config):
        path = tmp_path / "c.jsonl"
        self._write(path, [
            {"id": "p1", "doc_id": "d1", "text": "hello world"},
            {"id": "p2", "doc_id": "d1", "text": "more text"},
        ])
        coll = ingest_corpus(path, plain_config)
        assert len(coll) == 2
        assert coll["p1"].tokens == ("hello", "world")

    def test_missing_id_field_names_line(self, tmp_path, plain_config):
        path = tmp_path / "c.jsonl"
        self._write(path, [
            {"id": "p1", "doc_id": "d1", "text": "ok"},
            {"doc_id": "d1", "text": "broken"},
        ])
        with pytest.raises(ValueError, match="line 2"):
            ingest_corpus(path, plain_config)

    def test_invalid_json_names_line(self, tmp_path, plain_config):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "p1", "doc_id": "d", "text": "x"}\nnot json\n')
        with pytest.raises(ValueError, match="line 2"):
            ingest_corpus(path, plain_config)

    def test_whitespace_id_rejected(self, tmp_path, plain_config):
        path = tmp_path / "c.jsonl"
        self._write(path, [{"id": "p 1", "doc_id": "d1", "text": "a"}])
        with pytest.raises(ValueError, match="whitespace-free"):
            ingest_corpus(path, plain_config)

    def test_duplicate_id_rejected(self, tmp_path, plain_config):
        path = tmp_path / "c.jsonl"
        self._write(path, [
            {"id": "p1", "doc_id": "d1", "text": "a"},
            {"id": "p1", "doc_id": "d2", "text": "b"},
        ])
        with pytest.raises(ValueError, match="duplicate"):
            ingest_corpus(path, plain_config)

    def test_large_export_has_no_id_collisions(self, tmp_path, plain_config):
        path = tmp_path / "big.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(20_000):
                fh.write(json.dumps({"id": f"p{i}", "doc_id": f"d{i % 700}", "text": f"tok{i % 97} filler"}) + "\n")
        coll = ingest_corpus(path, plain_config)
        assert len(coll) == 20_000

    def test_round_trip(self, tmp_path, plain_config, rng):
        path = tmp_path / "c.jsonl"
        rows = [
            {"id": f"p{i}", "doc_id": f"d{i}", "text": " ".join(f"w{int(j)}" for j in rng.integers(0, 30, 6))}
            for i in range(25)
        ]
        self._write(path, rows)
        coll = ingest_corpus(path, plain_config)
        out = tmp_path / "rt.jsonl"
        write_corpus(out, coll)
        again = ingest_corpus(out, plain_config)
        assert again.ids == coll.ids
        assert [p.tokens for p in again] == [p.tokens for p in coll]


class TestSegmentDocument:
    DOC = "One sentence here. Two sentences now! Is three enough? Four follows. Five ends."

    def test_windows_cover_and_do_not_overlap(self):
        sentences = split_sentences(self.DOC)
        for seed in range(20):
            parts = segment_document(self.DOC, seed=seed)
            assert all(len(split_sentences(p.text)) in (1, 2, 3) for p in parts)
            joined = [s for p in parts for s in split_sentences(p.text)]
            assert joined == sentences

    def test_window_sizes_are_two_or_three_except_tail(self):
        parts = segment_document(self.DOC, seed=3)
        sizes = [len(split_sentences(p.text)) for p in parts]
        assert all(s in (2, 3) for s in sizes[:-1])

    def test_single_sentence_doc(self):
        parts = segment_document("Just one sentence.", seed=0)
        assert len(parts) == 1
        assert parts[0].text == "Just one sentence."

    def test_empty_doc(self):
        assert segment_document("", seed=0) == []

    def test_same_seed_same_segmentation(self):
        a = segment_document(self.DOC, seed=11)
        b = segment_document(self.DOC, seed=11)
        assert [p.text for p in a] == [p.text for p in b]

    def test_both_window_sizes_occur_across_seeds(self):
        sizes = set()
        for seed in range(30):
            parts = segment_document(self.DOC, seed=seed)
            sizes.add(len(split_sentences(parts[0].text)))
        assert sizes == {2, 3}


class TestQrels:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 1\n")
        j = load_qrels(path)
        assert j.data == {"q1": {"p1": 1}}

    def test_grade_zero_is_judged_nonrelevant(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 0\n")
        j = load_qrels(path)
        assert j.grade("q1", "p1") == 0
        assert not j.is_relevant("q1", "p1")

    def test_graded_entry_collapses_to_relevant(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 2\n")
        j = load_qrels(path)
        assert j.is_relevant("q1", "p1")
        assert j.relevant_ids("q1") == {"p1"}

    def test_non_integer_grade_rejected(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 high\n")
        with pytest.raises(ValueError, match="non-integer"):
            load_qrels(path)

    def test_repeated_entry_keeps_last(self, tmp_path, caplog):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 1\nq1 0 p1 0\n")
        with caplog.at_level("WARNING"):
            j = load_qrels(path)
        assert j.grade("q1", "p1") == 0
        assert any("repeated" in r.message for r in caplog.records)

    def test_negative_grade_rejected(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 p1 -1\n")
        with pytest.raises(ValueError, match="negative"):
            load_qrels(path)


class TestQueries:
    def test_load_queries(self, tmp_path, plain_config):
        path = tmp_path / "queries.tsv"
        path.write_text("q1\thello world\nq2\tanother one\n")
        queries = load_queries(path, plain_config)
        assert [q.query_id for q in queries] == ["q1", "q2"]
        assert queries[0].tokens == ("hello", "world")

    def test_missing_tab_rejected(self, tmp_path, plain_config):
        path = tmp_path / "queries.tsv"
        path.write_text("q1 hello world\n")
        with pytest.raises(ValueError):
            load_queries(path, plain_config)
