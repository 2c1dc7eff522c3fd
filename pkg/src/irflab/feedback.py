"""Feedback query-model estimators over accumulated judgment pools.

Estimators:
  estimate_rm3           relevance model weighted by Dirichlet P(Q|D),
                         interpolated with the original query
  estimate_distillation  EM topic model under a three-component mixture
                         (topic / corpus / non-relevant), interpolated
  rocchio_update         vector-space centroid update with negative clipping
  estimate_erm           RM3 with the document weight replaced by a mix of
                         exact-match likelihood and embedding-translation
                         likelihood

Query models are plain {term: probability} dicts (non-negative, summing to
one), so they serialize directly with ``json.dumps`` for inspection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Passage, Query
from .embeddings import EmbeddingModel
from .index import Index, TermVector, collection_prob, tfidf_vector

logger = logging.getLogger(__name__)

M_GRID = (10, 20, 30, 40, 50)
ALPHA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SIGMOID_A_GRID = (1.0, 5.0, 10.0, 20.0, 50.0)
SIGMOID_C_GRID = tuple(round(0.1 * i, 1) for i in range(10))
LAMBDA_ERM_GRID = tuple(round(0.1 * i, 1) for i in range(11))

# Weighted term distribution; probabilities >= 0, sum to 1 within 1e-9.
QueryModel = dict[str, float]


@dataclass(frozen=True)
class FeedbackParams:
    m: int = 20                 # expansion terms kept after truncation
    alpha_interp: float = 0.5   # weight of the original query model
    lambda_mix: float = 0.5     # corpus component of the distillation mixture
    lambda_nr: float = 0.1      # non-relevant component of the mixture
    rocchio_alpha: float = 1.0
    rocchio_beta: float = 0.75
    rocchio_gamma: float = 0.15
    em_max_iters: int = 50
    em_tol: float = 1e-6

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0.0 <= self.alpha_interp <= 1.0:
            raise ValueError("alpha_interp must be in [0, 1]")
        if min(self.lambda_mix, self.lambda_nr) < 0.0:
            raise ValueError("mixture weights must be >= 0")
        if min(self.rocchio_alpha, self.rocchio_beta, self.rocchio_gamma) < 0.0:
            raise ValueError("rocchio coefficients must be >= 0")
        if self.em_max_iters < 1:
            raise ValueError("em_max_iters must be >= 1")


@dataclass(frozen=True)
class ErmParams:
    lambda_erm: float = 0.5   # weight of the exact-match likelihood
    sigmoid_a: float = 10.0
    sigmoid_c: float = 0.5
    neighbors: int = 10

    def __post_init__(self):
        if not 0.0 <= self.lambda_erm <= 1.0:
            raise ValueError("lambda_erm must be in [0, 1]")
        if self.neighbors < 1:
            raise ValueError("neighbors must be >= 1")


@dataclass(frozen=True)
class FeedbackState:
    """Per-session accumulated judgment pools; grows monotonically."""

    relevant_pool: tuple[str, ...] = ()
    nonrelevant_pool: tuple[str, ...] = ()
    shown: frozenset[str] = frozenset()
    iteration: int = 0


def update_pools(state: FeedbackState, judged: Sequence[tuple[str, bool]]) -> FeedbackState:
    """Fold one iteration of judgments into the pools."""
    seen_now: set[str] = set()
    for pid, _ in judged:
        if pid in state.shown:
            raise ValueError(f"passage {pid!r} was already shown in this session")
        if pid in seen_now:
            raise ValueError(f"passage {pid!r} judged twice in one iteration")
        seen_now.add(pid)
    rel = list(state.relevant_pool)
    nonrel = list(state.nonrelevant_pool)
    for pid, is_rel in judged:
        (rel if is_rel else nonrel).append(pid)
    return FeedbackState(
        relevant_pool=tuple(rel),
        nonrelevant_pool=tuple(nonrel),
        shown=state.shown | seen_now,
        iteration=state.iteration + 1,
    )


def query_mle(query: Query) -> QueryModel:
    """Maximum-likelihood model of the query tokens."""
    if not query.tokens:
        raise ValueError(f"query {query.query_id!r} has no tokens")
    counts: dict[str, int] = {}
    for tok in query.tokens:
        counts[tok] = counts.get(tok, 0) + 1
    n = len(query.tokens)
    return {t: c / n for t, c in counts.items()}


def _normalize(dist: dict[str, float]) -> QueryModel:
    total = sum(dist.values())
    if total <= 0:
        raise ValueError("cannot normalize an all-zero distribution")
    return {t: w / total for t, w in dist.items()}


def _truncate_top_m(dist: dict[str, float], m: int) -> QueryModel:
    """Keep the m heaviest terms (ties broken by term) and renormalize."""
    top = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))[:m]
    return _normalize(dict(top))


def _interpolate(original: QueryModel, expansion: QueryModel, alpha: float) -> QueryModel:
    mixed: dict[str, float] = {}
    for t, w in original.items():
        mixed[t] = mixed.get(t, 0.0) + alpha * w
    for t, w in expansion.items():
        mixed[t] = mixed.get(t, 0.0) + (1.0 - alpha) * w
    return _normalize({t: w for t, w in mixed.items() if w > 0.0})


def _ml_counts(passage: Passage) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tok in passage.tokens:
        counts[tok] = counts.get(tok, 0) + 1
    return counts


def _log_query_likelihood(query: Query, passage: Passage, index: Index, mu: float) -> float:
    """Dirichlet-smoothed log P(Q|D); collection-unseen terms are skipped."""
    counts = _ml_counts(passage)
    dlen = len(passage.tokens)
    logp = 0.0
    for tok in query.tokens:
        p_c = collection_prob(index, tok)
        if p_c == 0.0:
            logger.warning("query term %r unseen in collection; skipped in P(Q|D)", tok)
            continue
        logp += np.log((counts.get(tok, 0) + mu * p_c) / (dlen + mu))
    return logp


def _pool_weighted_model(rel_pool: Sequence[Passage], doc_weights: np.ndarray) -> dict[str, float]:
    """P(w|R) = sum_D weight(D) * P_ml(w|D) with weights summing to one."""
    model: dict[str, float] = {}
    for passage, w in zip(rel_pool, doc_weights):
        if w == 0.0:
            continue
        dlen = len(passage.tokens)
        if dlen == 0:
            continue
        for term, tf in _ml_counts(passage).items():
            model[term] = model.get(term, 0.0) + w * tf / dlen
    if not model:
        raise ValueError("relevant pool contains no tokens")
    return model


def estimate_rm3(
    query: Query,
    rel_pool: Sequence[Passage],
    index: Index,
    params: FeedbackParams,
    mu: float = 1000.0,
) -> QueryModel:
    """Relevance model over the pool, truncated to the top m terms and
    interpolated with the query MLE by alpha_interp."""
    if not rel_pool:
        raise ValueError("relevant pool is empty")
    logps = np.array([_log_query_likelihood(query, p, index, mu) for p in rel_pool])
    weights = np.exp(logps - logps.max())
    weights /= weights.sum()
    relevance_model = _truncate_top_m(_pool_weighted_model(rel_pool, weights), params.m)
    return _interpolate(query_mle(query), relevance_model, params.alpha_interp)


def _mixture_em(
    counts: dict[str, int],
    p_corpus: dict[str, float],
    theta_nr: dict[str, float],
    lambda_mix: float,
    lambda_nr: float,
    max_iters: int,
    tol: float,
) -> dict[str, float]:
    """EM for the topic component of
    P(w) = (1-lm-ln)*theta_F(w) + lm*p(w|C) + ln*theta_N(w),
    maximizing the likelihood of the pooled counts. The log-likelihood is
    asserted non-decreasing each step (tolerance -1e-9)."""
    terms = sorted(counts)
    c = np.array([counts[t] for t in terms], dtype=np.float64)
    pc = np.array([p_corpus.get(t, 0.0) for t in terms])
    pn = np.array([theta_nr.get(t, 0.0) for t in terms])
    f = 1.0 - lambda_mix - lambda_nr
    theta = np.full(len(terms), 1.0 / len(terms))
    prev_ll = None
    for _ in range(max_iters):
        mix = f * theta + lambda_mix * pc + lambda_nr * pn
        ll = float(np.sum(c * np.log(mix)))
        if prev_ll is not None:
            assert ll - prev_ll >= -1e-9, f"EM log-likelihood decreased: {prev_ll} -> {ll}"
            if ll - prev_ll < tol:
                break
        prev_ll = ll
        resp = f * theta / mix
        theta = c * resp
        theta /= theta.sum()
    return dict(zip(terms, theta.tolist()))


def estimate_distillation(
    query: Query,
    rel_pool: Sequence[Passage],
    nr_pool: Sequence[Passage],
    index: Index,
    params: FeedbackParams,
) -> QueryModel:
    """Distill a topic model out of the relevant pool by explaining away
    corpus-typical mass and a non-relevant topic estimated from the
    non-relevant pool."""
    if not rel_pool:
        raise ValueError("relevant pool is empty")
    lambda_nr = params.lambda_nr
    if lambda_nr > 0.0 and not nr_pool:
        logger.warning("non-relevant pool empty; dropping the non-relevant mixture component")
        lambda_nr = 0.0
    if params.lambda_mix + lambda_nr >= 1.0:
        raise ValueError("lambda_mix + lambda_nr must be < 1")

    counts: dict[str, int] = {}
    for passage in rel_pool:
        for term, tf in _ml_counts(passage).items():
            counts[term] = counts.get(term, 0) + tf
    if not counts:
        raise ValueError("relevant pool contains no tokens")

    theta_nr: dict[str, float] = {}
    if lambda_nr > 0.0:
        nr_counts: dict[str, int] = {}
        for passage in nr_pool:
            for term, tf in _ml_counts(passage).items():
                nr_counts[term] = nr_counts.get(term, 0) + tf
        total = sum(nr_counts.values())
        if total > 0:
            theta_nr = {t: c / total for t, c in nr_counts.items()}
        else:
            logger.warning("non-relevant pool has no tokens; dropping its mixture component")
            lambda_nr = 0.0

    p_corpus = {t: collection_prob(index, t) for t in counts}
    theta = _mixture_em(
        counts, p_corpus, theta_nr, params.lambda_mix, lambda_nr,
        params.em_max_iters, params.em_tol,
    )
    topic_model = _truncate_top_m(theta, params.m)
    return _interpolate(query_mle(query), topic_model, params.alpha_interp)


def rocchio_update(
    query_vec: TermVector,
    rel_pool: Sequence[Passage],
    nr_pool: Sequence[Passage],
    index: Index,
    params: FeedbackParams,
) -> TermVector:
    """alpha*q + beta*centroid(rel) - gamma*centroid(nonrel); negatives are
    clipped to zero and only the original terms plus the top m new terms
    survive."""
    updated: dict[str, float] = {t: params.rocchio_alpha * w for t, w in query_vec.items()}
    if rel_pool and params.rocchio_beta > 0.0:
        scale = params.rocchio_beta / len(rel_pool)
        for passage in rel_pool:
            for term, w in tfidf_vector(passage, index).items():
                updated[term] = updated.get(term, 0.0) + scale * w
    if nr_pool and params.rocchio_gamma > 0.0:
        scale = params.rocchio_gamma / len(nr_pool)
        for passage in nr_pool:
            for term, w in tfidf_vector(passage, index).items():
                updated[term] = updated.get(term, 0.0) - scale * w
    clipped = {t: max(0.0, w) for t, w in updated.items()}
    new_terms = sorted(
        ((t, w) for t, w in clipped.items() if t not in query_vec and w > 0.0),
        key=lambda kv: (-kv[1], kv[0]),
    )[: params.m]
    out = {t: clipped[t] for t in query_vec}
    out.update(dict(new_terms))
    return out


def _translation_tables(
    terms: Sequence[str],
    model: EmbeddingModel,
    erm: ErmParams,
) -> dict[str, dict[str, float]]:
    """Per query term: sigmoid-transformed cosine weights over its k nearest
    vocabulary neighbors, normalized over the neighbor set."""
    unit = model.unit_word_vectors()
    vocab_terms = model.terms
    tables: dict[str, dict[str, float]] = {}
    for term in terms:
        qi = model.vocab.get(term)
        if qi is None:
            continue
        sims = unit @ unit[qi]
        k = min(erm.neighbors, len(vocab_terms))
        nearest = np.argpartition(-sims, k - 1)[:k] if k < len(vocab_terms) else np.arange(len(vocab_terms))
        order = sorted(nearest.tolist(), key=lambda j: (-sims[j], vocab_terms[j]))[:k]
        raw = {vocab_terms[j]: _sigmoid(erm.sigmoid_a * (float(sims[j]) - erm.sigmoid_c)) for j in order}
        tables[term] = _normalize(raw)
    return tables


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def estimate_erm(
    query: Query,
    rel_pool: Sequence[Passage],
    index: Index,
    embeddings: EmbeddingModel,
    params: FeedbackParams,
    erm: ErmParams,
    mu: float = 1000.0,
) -> QueryModel:
    """RM3 with P(Q|D) replaced by
    lambda*P_exact(Q|D) + (1-lambda)*prod_q sum_w T(q|w) P_ml(w|D).

    Query terms outside the embedding vocabulary are skipped from the
    translation product with a warning. Likelihoods are combined in raw
    probability space, so this suits short queries (topic-description
    length), not paragraph-length ones.
    """
    if embeddings is None:
        raise ValueError("estimate_erm requires an embedding model")
    if not rel_pool:
        raise ValueError("relevant pool is empty")
    in_vocab = [t for t in query.tokens if t in embeddings.vocab]
    for t in query.tokens:
        if t not in embeddings.vocab:
            logger.warning("query term %r not in embedding vocabulary; skipped in translation", t)
    tables = _translation_tables(sorted(set(in_vocab)), embeddings, erm)

    weights = np.zeros(len(rel_pool))
    for i, passage in enumerate(rel_pool):
        p_exact = float(np.exp(_log_query_likelihood(query, passage, index, mu)))
        counts = _ml_counts(passage)
        dlen = len(passage.tokens)
        p_trans = 1.0
        for tok in in_vocab:
            table = tables[tok]
            p_trans *= sum(tw * counts.get(w, 0) / dlen for w, tw in table.items()) if dlen else 0.0
        weights[i] = erm.lambda_erm * p_exact + (1.0 - erm.lambda_erm) * p_trans
    total = weights.sum()
    if total <= 0.0:
        logger.warning("all document weights vanished; falling back to uniform pool weights")
        weights = np.full(len(rel_pool), 1.0 / len(rel_pool))
    else:
        weights = weights / total
    relevance_model = _truncate_top_m(_pool_weighted_model(rel_pool, weights), params.m)
    return _interpolate(query_mle(query), relevance_model, params.alpha_interp)


def check_query_model(model: QueryModel, tol: float = 1e-9) -> None:
    """Raise if the model violates the distribution invariants."""
    if any(w < 0 for w in model.values()):
        raise ValueError("query model has negative weights")
    total = sum(model.values())
    if abs(total - 1.0) > tol:
        raise ValueError(f"query model sums to {total}, expected 1 within {tol}")
