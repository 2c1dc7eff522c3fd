"""Ranking functions over the inverted index.

Three scorers:
  rank_ql      weighted query models under Dirichlet smoothing, in the
               KL-divergence rank-equivalent form (reduces to standard QL
               for a maximum-likelihood query model)
  rank_bm25    Okapi BM25 with the IDF clamped at zero
  rank_rocchio dot product between a tf-idf query vector and tf-idf passages

All rankings are deterministic: descending score with ties broken by
ascending passage_id. Excluded passages never appear in the output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Mapping

import numpy as np

from .corpus import Query
from .index import Index, TermVector, collection_prob

logger = logging.getLogger(__name__)

MU_GRID = (30.0, 50.0, 300.0, 500.0, 1000.0, 1500.0)
K1_GRID = (1.2, 1.4, 1.6, 1.8, 2.0)


@dataclass(frozen=True)
class RetrievalParams:
    mu: float = 1000.0
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class RankedList:
    """Descending-score ranking of passages for one query."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.entries)

    def score_of(self, passage_id: str) -> float:
        for pid, score in self.entries:
            if pid == passage_id:
                return score
        raise KeyError(passage_id)


def _take_top(index: Index, scores: np.ndarray, exclude: AbstractSet[str], depth: int, query_id: str) -> RankedList:
    """Sort by (-score, passage_id asc), drop excluded, cut to depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if exclude:
        keep = np.ones(index.passage_count, dtype=bool)
        for pid in exclude:
            pos = index.id_to_pos.get(pid)
            if pos is not None:
                keep[pos] = False
        cand = np.nonzero(keep)[0]
    else:
        cand = np.arange(index.passage_count)
    order = np.lexsort((index.tie_rank[cand], -scores[cand]))
    top = cand[order[:depth]]
    entries = tuple((index.ids[i], float(scores[i])) for i in top)
    return RankedList(query_id=query_id, entries=entries)


def rank_ql(
    query_model: Mapping[str, float],
    index: Index,
    params: RetrievalParams,
    depth: int,
    exclude: AbstractSet[str] = frozenset(),
    query_id: str = "q",
) -> RankedList:
    """Score passages by sum_w P(w|Q) * ln[(tf + mu p(w|C)) / (|d| + mu)].

    Expects a normalized query model (weights >= 0 summing to 1). Terms
    absent from the collection (p(w|C) = 0) are skipped with a warning and
    leave the remaining weights untouched.
    """
    if not query_model:
        raise ValueError("empty query model")
    mu = params.mu
    scores = np.zeros(index.passage_count, dtype=np.float64)
    kept_weight = 0.0
    const = 0.0
    for term, weight in query_model.items():
        p_c = collection_prob(index, term)
        if p_c == 0.0:
            logger.warning("query term %r unseen in collection; skipped", term)
            continue
        kept_weight += weight
        const += weight * np.log(mu * p_c)
        positions, tfs = index.postings[term]
        scores[positions] += weight * (np.log(tfs + mu * p_c) - np.log(mu * p_c))
    scores += const - kept_weight * np.log(index.doc_len + mu)
    return _take_top(index, scores, exclude, depth, query_id)


def rank_bm25(
    query: Query,
    index: Index,
    params: RetrievalParams,
    depth: int,
    exclude: AbstractSet[str] = frozenset(),
) -> RankedList:
    """Okapi BM25; idf = max(0, ln((N - df + 0.5) / (df + 0.5))).

    Repeated query tokens contribute once per occurrence.
    """
    if not query.tokens:
        raise ValueError(f"query {query.query_id!r} has no tokens")
    k1, b = params.k1, params.b
    n = index.passage_count
    norm = k1 * (1.0 - b + b * index.doc_len / index.avg_doc_len)
    scores = np.zeros(n, dtype=np.float64)
    qtf: dict[str, int] = {}
    for tok in query.tokens:
        qtf[tok] = qtf.get(tok, 0) + 1
    for term, mult in qtf.items():
        df = index.document_frequency.get(term, 0)
        if df == 0:
            continue
        w = max(0.0, float(np.log((n - df + 0.5) / (df + 0.5))))
        if w == 0.0:
            continue
        positions, tfs = index.postings[term]
        scores[positions] += mult * w * tfs * (k1 + 1.0) / (tfs + norm[positions])
    return _take_top(index, scores, exclude, depth, query.query_id)


def rank_rocchio(
    query_vec: TermVector,
    index: Index,
    depth: int,
    exclude: AbstractSet[str] = frozenset(),
    query_id: str = "q",
) -> RankedList:
    """Inner product of the query vector with each passage's tf-idf vector."""
    if not query_vec:
        raise ValueError("empty query vector")
    scores = np.zeros(index.passage_count, dtype=np.float64)
    for term, qw in query_vec.items():
        if qw == 0.0:
            continue
        df = index.document_frequency.get(term, 0)
        if df == 0:
            continue
        w = float(np.log(index.passage_count / df))
        if w == 0.0:
            continue
        positions, tfs = index.postings[term]
        scores[positions] += qw * w * tfs
    return _take_top(index, scores, exclude, depth, query_id)


def write_run(path, rankings: Iterable[RankedList], tag: str = "irflab") -> None:
    """Write rankings in TREC run format: qid Q0 pid rank score tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in rankings:
            for rank, (pid, score) in enumerate(ranked.entries, start=1):
                fh.write(f"{ranked.query_id} Q0 {pid} {rank} {score:.6f} {tag}\n")


def read_run(path) -> dict[str, list[tuple[str, float]]]:
    """Read a TREC run file; entries per query ordered by the rank column."""
    raw: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 6:
                raise ValueError(f"{path}: line {lineno}: expected 6 fields, got {len(fields)}")
            qid, _, pid, rank_str, score_str, _ = fields
            raw.setdefault(qid, []).append((int(rank_str), pid, float(score_str)))
    out: dict[str, list[tuple[str, float]]] = {}
    for qid, rows in raw.items():
        rows.sort(key=lambda r: r[0])
        out[qid] = [(pid, score) for _, pid, score in rows]
    return out
