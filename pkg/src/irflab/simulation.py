"""Simulated feedback sessions and freezing-rank construction.

A session alternates ranking and judging: the top N unshown results of the
current query model are shown, judged against the qrels, folded into the
pools, and the model is re-estimated. Shown results keep their presentation
ranks (iteration i occupies ranks i*N+1 .. (i+1)*N); after the last
iteration's judgments the final model ranks all remaining candidates as the
tail. Language-model methods (rm3, distillation, erm) start from Query
Likelihood; rocchio starts from BM25 and re-ranks by tf-idf dot product.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Judgments, PassageCollection, Query
from .embeddings import EmbeddingModel
from .feedback import (
    ErmParams,
    FeedbackParams,
    FeedbackState,
    estimate_distillation,
    estimate_erm,
    estimate_rm3,
    query_mle,
    rocchio_update,
    update_pools,
)
from .fusion import FusionConfig, fused_rank
from .index import Index, TermVector
from .retrieval import RankedList, RetrievalParams, rank_bm25, rank_ql, rank_rocchio

logger = logging.getLogger(__name__)

LM_METHODS = ("rm3", "distillation", "erm")
VSM_METHODS = ("rocchio",)
RF_METHODS = LM_METHODS + VSM_METHODS
BASELINE_METHODS = ("ql", "bm25")

# judgment budget of 10 split as per_iter x iterations
BUDGET_SETTINGS = ((10, 1), (5, 2), (2, 5), (1, 10))


@dataclass(frozen=True)
class SessionConfig:
    per_iter: int = 10
    iterations: int = 1
    rf_method: str = "rm3"
    fusion: FusionConfig | None = None
    depth: int | None = None   # None: 100 + number of shown results
    budget: int | None = None  # None: per_iter * iterations

    def __post_init__(self):
        if self.per_iter < 1 or self.iterations < 1:
            raise ValueError("per_iter and iterations must be >= 1")
        if self.rf_method not in RF_METHODS:
            raise ValueError(f"unknown rf_method {self.rf_method!r}")
        if self.budget is not None and self.budget != self.per_iter * self.iterations:
            logger.warning(
                "budget %d != per_iter*iterations (%d)", self.budget, self.per_iter * self.iterations
            )

    @property
    def judged_total(self) -> int:
        return self.budget if self.budget is not None else self.per_iter * self.iterations


@dataclass(frozen=True)
class EngineContext:
    """Everything a session needs besides the query and the qrels."""

    collection: PassageCollection
    index: Index
    retrieval: RetrievalParams = RetrievalParams()
    feedback: FeedbackParams = FeedbackParams()
    erm: ErmParams | None = None
    embeddings: EmbeddingModel | None = None


@dataclass(frozen=True)
class FrozenRanking:
    """Per-iteration shown blocks in presentation order plus the final tail."""

    query_id: str
    shown_blocks: tuple[tuple[str, ...], ...]
    tail: RankedList
    early_exhausted: bool = False

    @property
    def frozen_prefix(self) -> tuple[str, ...]:
        out: list[str] = []
        for block in self.shown_blocks[:-1]:
            out.extend(block)
        return tuple(out)

    @property
    def shown(self) -> frozenset[str]:
        return frozenset(pid for block in self.shown_blocks for pid in block)


def freeze_ranking(frozen: FrozenRanking) -> tuple[str, ...]:
    """The evaluated list: shown blocks at their presentation ranks, then the
    re-ranked tail over everything unshown."""
    out: list[str] = []
    for block in frozen.shown_blocks:
        out.extend(block)
    out.extend(frozen.tail.ids())
    return tuple(out)


@dataclass
class SessionResult:
    frozen: FrozenRanking
    trace: list[dict] = field(default_factory=list)


def _query_tfidf(query: Query, index: Index) -> TermVector:
    counts: dict[str, int] = {}
    for tok in query.tokens:
        counts[tok] = counts.get(tok, 0) + 1
    vec: TermVector = {}
    for term, tf in counts.items():
        df = index.document_frequency.get(term, 0)
        if df == 0:
            continue
        w = tf * float(np.log(index.passage_count / df))
        if w != 0.0:
            vec[term] = w
    return vec


class _SessionModel:
    """Current query model plus the scorer matching the method family."""

    def __init__(self, query: Query, method: str, ctx: EngineContext):
        self.query = query
        self.method = method
        self.ctx = ctx
        if method in LM_METHODS:
            self.kind = "lm"
            self.model = query_mle(query)
        else:
            self.kind = "vsm"
            self.vec = _query_tfidf(query, index=ctx.index)
            if not self.vec:
                raise ValueError(f"query {query.query_id!r} has no indexable tokens")
        self.first_ranking_done = False

    def rank(self, exclude: frozenset[str], depth: int) -> RankedList:
        ctx = self.ctx
        if self.kind == "lm":
            ranked = rank_ql(self.model, ctx.index, ctx.retrieval, depth, exclude, query_id=self.query.query_id)
        elif not self.first_ranking_done:
            ranked = rank_bm25(self.query, ctx.index, ctx.retrieval, depth, exclude)
        else:
            ranked = rank_rocchio(self.vec, ctx.index, depth, exclude, query_id=self.query.query_id)
        return ranked

    def reestimate(self, state: FeedbackState) -> None:
        ctx = self.ctx
        rel = [ctx.collection[pid] for pid in state.relevant_pool]
        nonrel = [ctx.collection[pid] for pid in state.nonrelevant_pool]
        self.first_ranking_done = True
        if self.method == "rocchio":
            self.vec = rocchio_update(_query_tfidf(self.query, ctx.index), rel, nonrel, ctx.index, ctx.feedback)
            return
        if not rel:
            # No positive evidence yet: keep the maximum-likelihood query model.
            self.model = query_mle(self.query)
            return
        if self.method == "rm3":
            self.model = estimate_rm3(self.query, rel, ctx.index, ctx.feedback, mu=ctx.retrieval.mu)
        elif self.method == "distillation":
            self.model = estimate_distillation(self.query, rel, nonrel, ctx.index, ctx.feedback)
        elif self.method == "erm":
            if ctx.erm is None or ctx.embeddings is None:
                raise ValueError("erm sessions need ErmParams and an embedding model in the context")
            self.model = estimate_erm(
                self.query, rel, ctx.index, ctx.embeddings, ctx.feedback, ctx.erm, mu=ctx.retrieval.mu
            )
        else:
            raise ValueError(f"unknown method {self.method!r}")

    def model_summary(self) -> dict:
        weights = self.model if self.kind == "lm" else self.vec
        top = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
        return {t: round(w, 6) for t, w in top}


def _maybe_fuse(ranked: RankedList, state: FeedbackState, cfg: SessionConfig, ctx: EngineContext) -> RankedList:
    if cfg.fusion is None or not state.relevant_pool:
        return ranked
    if ctx.embeddings is None:
        raise ValueError("fusion requires an embedding model in the context")
    return fused_rank(ranked, state, ctx.embeddings, cfg.fusion, ctx.collection, ctx.index)


def run_irf_session(query: Query, qrels: Judgments, cfg: SessionConfig, ctx: EngineContext) -> SessionResult:
    """Drive one simulated session; judgments come from the qrels' true labels."""
    state = FeedbackState()
    model = _SessionModel(query, cfg.rf_method, ctx)
    blocks: list[tuple[str, ...]] = []
    trace: list[dict] = []
    early = False
    for iteration in range(cfg.iterations):
        depth = cfg.depth if cfg.depth is not None else 100 + len(state.shown)
        ranked = _maybe_fuse(model.rank(state.shown, depth), state, cfg, ctx)
        block = ranked.ids()[: cfg.per_iter]
        if len(block) < cfg.per_iter:
            early = True
            logger.warning(
                "query %s: only %d candidates left in iteration %d; ending session early",
                query.query_id, len(block), iteration,
            )
        if not block:
            break
        judged = [(pid, qrels.is_relevant(query.query_id, pid)) for pid in block]
        state = update_pools(state, judged)
        blocks.append(tuple(block))
        model.reestimate(state)
        trace.append({
            "iteration": iteration,
            "shown": list(block),
            "judgments": {pid: rel for pid, rel in judged},
            "model": model.model_summary(),
        })
        if early:
            break
    depth = cfg.depth if cfg.depth is not None else 100 + len(state.shown)
    tail = _maybe_fuse(model.rank(state.shown, depth), state, cfg, ctx)
    frozen = FrozenRanking(
        query_id=query.query_id,
        shown_blocks=tuple(blocks),
        tail=tail,
        early_exhausted=early,
    )
    return SessionResult(frozen=frozen, trace=trace)


@dataclass(frozen=True)
class OneRelDraw:
    """One retrieval given a single fed relevant passage."""

    topic_id: str
    fed_passage: str
    ranking: RankedList


def run_one_rel_experiment(
    query: Query,
    qrels: Judgments,
    method: str,
    ctx: EngineContext,
    fusion: FusionConfig | None = None,
    depth: int | None = None,
    draws: int = 10,
    seed: int = 0,
) -> list[OneRelDraw]:
    """Feed one uniformly drawn relevant passage as the sole positive
    judgment and rank the remaining candidates, `draws` times. Each draw is
    its own evaluation topic. Methods 'ql'/'bm25' ignore the feedback and
    serve as baselines. Queries with fewer than two in-collection relevant
    passages are skipped."""
    if method not in RF_METHODS + BASELINE_METHODS:
        raise ValueError(f"unknown method {method!r}")
    rel_ids = sorted(pid for pid in qrels.relevant_ids(query.query_id) if pid in ctx.collection)
    if len(rel_ids) < 2:
        logger.warning("query %s has %d relevant passages; one-rel experiment skipped",
                       query.query_id, len(rel_ids))
        return []
    rng = np.random.default_rng(seed)
    out: list[OneRelDraw] = []
    for draw in range(draws):
        fed = rel_ids[int(rng.integers(len(rel_ids)))]
        topic_id = f"{query.query_id}.d{draw}"
        state = update_pools(FeedbackState(), [(fed, True)])
        k = depth if depth is not None else 100 + 1
        if method in RF_METHODS:
            model = _SessionModel(query, method, ctx)
            model.reestimate(state)
            ranked = model.rank(state.shown, k)
            if fusion is not None:
                if ctx.embeddings is None:
                    raise ValueError("fusion requires an embedding model in the context")
                ranked = fused_rank(ranked, state, ctx.embeddings, fusion, ctx.collection, ctx.index)
        elif method == "ql":
            ranked = rank_ql(query_mle(query), ctx.index, ctx.retrieval, k, state.shown, query_id=query.query_id)
        else:
            ranked = rank_bm25(query, ctx.index, ctx.retrieval, k, state.shown)
        out.append(OneRelDraw(
            topic_id=topic_id,
            fed_passage=fed,
            ranking=RankedList(query_id=topic_id, entries=ranked.entries),
        ))
    return out


def write_trace(path, results: Sequence[SessionResult]) -> None:
    """Session audit log, one JSON object per iteration."""
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            for record in result.trace:
                row = dict(record, query_id=result.frozen.query_id)
                fh.write(json.dumps(row, sort_keys=True) + "\n")
