"""Experiment orchestration shared by the CLI commands.

run-irf: per feedback method and per (per_iter x iterations) setting, drive
a session for every query, evaluate the freezing ranking, optionally tune
any configured parameter grids with seeded k-fold cross-validation, and
emit TREC runs, session traces, per-query CSVs, and a summary table (rows
are methods, columns are iteration settings).

run-onerel: per method (including the no-feedback baselines), ten draws per
query with one fed relevant passage, each (query, draw) pair a topic.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .config import (
    ConfigError,
    erm_from_config,
    feedback_from_config,
    fusion_from_config,
    methods_from_config,
    onerel_methods_from_config,
    retrieval_from_config,
    settings_from_config,
    tokenizer_from_config,
)
from .corpus import Judgments, Query, ingest_corpus, load_qrels, load_queries
from .embeddings import load_model
from .evaluation import (
    MetricResult,
    assign_folds,
    cross_validate_grid,
    evaluate_ranking,
    fisher_randomization,
)
from .feedback import query_mle
from .fusion import FusionConfig
from .index import build_index
from .retrieval import RankedList, rank_bm25, rank_ql, read_run, write_run
from .simulation import (
    LM_METHODS,
    EngineContext,
    SessionConfig,
    SessionResult,
    freeze_ranking,
    run_irf_session,
    run_one_rel_experiment,
    write_trace,
)

logger = logging.getLogger(__name__)


@dataclass
class Engine:
    ctx: EngineContext
    queries: list[Query]
    qrels: Judgments


def load_engine(cfg: dict) -> Engine:
    corpus_cfg = cfg.get("corpus", {})
    for key in ("passages", "queries", "qrels"):
        if key not in corpus_cfg:
            raise ConfigError(f"corpus.{key} is required")
    tokenizer = tokenizer_from_config(cfg)
    collection = ingest_corpus(corpus_cfg["passages"], tokenizer)
    queries = load_queries(corpus_cfg["queries"], tokenizer)
    qrels = load_qrels(corpus_cfg["qrels"])
    embeddings = None
    model_path = cfg.get("embeddings", {}).get("model_path")
    if model_path:
        embeddings = load_model(model_path)
    ctx = EngineContext(
        collection=collection,
        index=build_index(collection),
        retrieval=retrieval_from_config(cfg),
        feedback=feedback_from_config(cfg),
        erm=erm_from_config(cfg),
        embeddings=embeddings,
    )
    queries = [q for q in queries if q.tokens]
    return Engine(ctx=ctx, queries=queries, qrels=qrels)


def _run_sessions(
    queries: Sequence[Query],
    qrels: Judgments,
    scfg: SessionConfig,
    ctx: EngineContext,
    threads: int = 1,
) -> dict[str, SessionResult]:
    def one(query: Query) -> tuple[str, SessionResult]:
        return query.query_id, run_irf_session(query, qrels, scfg, ctx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, queries))
    return dict(one(q) for q in queries)


def _frozen_metric(results: Mapping[str, SessionResult], qrels: Judgments, metric: str) -> MetricResult:
    per_query = {
        qid: evaluate_ranking(freeze_ranking(res.frozen), qrels.relevant_ids(qid), metric)
        for qid, res in results.items()
    }
    return MetricResult.aggregate(metric, per_query)


def initial_ranking(query: Query, method: str, ctx: EngineContext, depth: int = 100) -> RankedList:
    """The no-feedback retrieval a method starts from: QL for the language
    model family, BM25 for the vector-space family."""
    if method in LM_METHODS or method == "ql":
        return rank_ql(query_mle(query), ctx.index, ctx.retrieval, depth, query_id=query.query_id)
    return rank_bm25(query, ctx.index, ctx.retrieval, depth)


def _grids_for_method(cfg: dict, method: str, fusion: FusionConfig | None) -> dict[str, list]:
    grids: dict[str, list] = {}
    retrieval = cfg.get("retrieval", {})
    feedback = cfg.get("feedback", {})
    if method in LM_METHODS and retrieval.get("mu_grid"):
        grids["mu"] = list(retrieval["mu_grid"])
    if method == "rocchio" and retrieval.get("k1_grid"):
        grids["k1"] = list(retrieval["k1_grid"])
    if feedback.get("m_grid"):
        grids["m"] = [int(v) for v in feedback["m_grid"]]
    if method != "rocchio" and feedback.get("alpha_grid"):
        grids["alpha_interp"] = list(feedback["alpha_grid"])
    if fusion is not None and cfg.get("fusion", {}).get("lambda_grid"):
        grids["lambda_sf"] = list(cfg["fusion"]["lambda_grid"])
    return grids


def _apply_point(ctx: EngineContext, fusion: FusionConfig | None, point: Mapping) -> tuple[EngineContext, FusionConfig | None]:
    retrieval = ctx.retrieval
    feedback = ctx.feedback
    if "mu" in point:
        retrieval = replace(retrieval, mu=float(point["mu"]))
    if "k1" in point:
        retrieval = replace(retrieval, k1=float(point["k1"]))
    if "m" in point:
        feedback = replace(feedback, m=int(point["m"]))
    if "alpha_interp" in point:
        feedback = replace(feedback, alpha_interp=float(point["alpha_interp"]))
    new_ctx = replace(ctx, retrieval=retrieval, feedback=feedback)
    new_fusion = fusion
    if fusion is not None and "lambda_sf" in point:
        new_fusion = replace(fusion, lambda_sf=float(point["lambda_sf"]))
    return new_ctx, new_fusion


def _write_per_query_csv(path, per_metric: Mapping[str, MetricResult]) -> None:
    metrics = list(per_metric)
    topics = sorted(next(iter(per_metric.values())).per_query)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic"] + metrics)
        for topic in topics:
            writer.writerow([topic] + [f"{per_metric[m].per_query[topic]:.6f}" for m in metrics])
        writer.writerow(["mean"] + [f"{per_metric[m].mean:.6f}" for m in metrics])


def write_summary_csv(path, rows: Mapping[str, Mapping[str, float]], columns: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + list(columns))
        for name, values in rows.items():
            writer.writerow([name] + [f"{values[c]:.4f}" if c in values else "" for c in columns])


def format_table(rows: Mapping[str, Mapping[str, float]], columns: Sequence[str], title: str) -> str:
    width = max(len(name) for name in rows) + 2
    lines = [title, f"{'':<{width}}" + "".join(f"{c:>12}" for c in columns)]
    for name, values in rows.items():
        cells = "".join(f"{values[c]:>12.4f}" if c in values else f"{'-':>12}" for c in columns)
        lines.append(f"{name:<{width}}" + cells)
    return "\n".join(lines)


def irf_experiment(cfg: dict, threads: int = 1) -> dict[str, dict[str, float]]:
    """Run the full iterative-feedback experiment; returns the summary rows
    {method: {column: mean score}} for the objective metric."""
    engine = load_engine(cfg)
    out_dir = Path(cfg.get("output_dir", "irflab-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = methods_from_config(cfg)
    settings = settings_from_config(cfg)
    fusion = fusion_from_config(cfg)
    metrics = cfg.get("evaluation", {}).get("metrics", ["map100", "ndcg20"])
    objective = metrics[0]
    folds = int(cfg.get("evaluation", {}).get("folds", 5))
    seed = int(cfg.get("seed", 0))
    depth = cfg.get("session", {}).get("depth")

    columns = ["initial"] + [f"{n}x{i}" for n, i in settings]
    summary: dict[str, dict[str, float]] = {}
    for method in methods:
        row: dict[str, float] = {}
        init_scores = {
            q.query_id: evaluate_ranking(
                initial_ranking(q, method, engine.ctx).ids(),
                engine.qrels.relevant_ids(q.query_id), objective)
            for q in engine.queries
        }
        row["initial"] = MetricResult.aggregate(objective, init_scores).mean
        for per_iter, iterations in settings:
            tag = f"{method}_{per_iter}x{iterations}"
            scfg = SessionConfig(per_iter=per_iter, iterations=iterations,
                                 rf_method=method, fusion=fusion, depth=depth)
            grids = _grids_for_method(cfg, method, fusion)
            if grids:
                results_cache: dict[tuple, dict[str, SessionResult]] = {}

                def evaluate(point: Mapping) -> dict[str, float]:
                    key = tuple(sorted(point.items()))
                    ctx_p, fusion_p = _apply_point(engine.ctx, fusion, point)
                    results = _run_sessions(engine.queries, engine.qrels,
                                            replace(scfg, fusion=fusion_p), ctx_p, threads)
                    results_cache[key] = results
                    return _frozen_metric(results, engine.qrels, objective).per_query

                chosen, _ = cross_validate_grid(
                    [q.query_id for q in engine.queries], grids, evaluate, folds=folds, seed=seed)
                folds_assign = assign_folds([q.query_id for q in engine.queries], folds, seed)
                results = {}
                for fold_i, point in enumerate(chosen):
                    key = tuple(sorted(point.items()))
                    for qid in folds_assign[fold_i]:
                        results[qid] = results_cache[key][qid]
                _write_json(out_dir / f"chosen_params_{tag}.json", chosen)
            else:
                results = _run_sessions(engine.queries, engine.qrels, scfg, engine.ctx, threads)
            rankings = [
                RankedList(query_id=qid, entries=tuple(
                    (pid, float(len(full) - i)) for i, pid in enumerate(full)))
                for qid, res in sorted(results.items())
                for full in [freeze_ranking(res.frozen)]
            ]
            write_run(out_dir / f"run_irf_{tag}.txt", rankings, tag=tag)
            write_trace(out_dir / f"trace_{tag}.jsonl", list(results.values()))
            per_metric = {m: _frozen_metric(results, engine.qrels, m) for m in metrics}
            _write_per_query_csv(out_dir / f"perquery_{tag}.csv", per_metric)
            row[f"{per_iter}x{iterations}"] = per_metric[objective].mean
        summary[method] = row
    write_summary_csv(out_dir / f"summary_{objective}.csv", summary, columns)
    logger.info("\n%s", format_table(summary, columns, f"mean {objective} of freezing rank lists"))
    return summary


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)


def onerel_experiment(cfg: dict, threads: int = 1) -> dict[str, dict[str, float]]:
    """Retrieval given one fed relevant passage; returns {method: {metric: mean}}."""
    engine = load_engine(cfg)
    out_dir = Path(cfg.get("output_dir", "irflab-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = onerel_methods_from_config(cfg)
    fusion = fusion_from_config(cfg)
    draws = int(cfg.get("onerel", {}).get("draws", 10))
    seed = int(cfg.get("seed", 0))
    metrics = cfg.get("evaluation", {}).get("metrics", ["p1", "mrr", "map100"])
    depth = cfg.get("session", {}).get("depth")

    summary: dict[str, dict[str, float]] = {}
    for method in methods:
        all_draws = []
        for query in engine.queries:
            all_draws.extend(run_one_rel_experiment(
                query, engine.qrels, method, engine.ctx,
                fusion=fusion if method not in ("ql", "bm25") else None,
                depth=depth, draws=draws, seed=seed))
        write_run(out_dir / f"run_onerel_{method}.txt", [d.ranking for d in all_draws], tag=f"onerel_{method}")
        per_metric = {}
        for metric in metrics:
            per_query = {}
            for d in all_draws:
                qid = d.topic_id.rsplit(".d", 1)[0]
                relevant = engine.qrels.relevant_ids(qid) - {d.fed_passage}
                per_query[d.topic_id] = evaluate_ranking(d.ranking.ids(), relevant, metric)
            per_metric[metric] = MetricResult.aggregate(metric, per_query)
        _write_per_query_csv(out_dir / f"perquery_onerel_{method}.csv", per_metric)
        summary[method] = {m: res.mean for m, res in per_metric.items()}
    write_summary_csv(out_dir / "summary_onerel.csv", summary, metrics)
    logger.info("\n%s", format_table(summary, metrics, "one-relevant-passage experiment"))
    return summary


def evaluate_run_file(run_path, qrels_path, metrics: Sequence[str]) -> dict[str, MetricResult]:
    run = read_run(run_path)
    if not run:
        raise ValueError(f"{run_path}: empty run file")
    qrels = load_qrels(qrels_path)
    out = {}
    for metric in metrics:
        per_query = {
            qid: evaluate_ranking([pid for pid, _ in entries], qrels.relevant_ids(qid), metric)
            for qid, entries in run.items()
        }
        out[metric] = MetricResult.aggregate(metric, per_query)
    return out


def significance_between(run_a, run_b, qrels_path, metric: str,
                         permutations: int = 100_000, seed: int = 0) -> float:
    a = evaluate_run_file(run_a, qrels_path, [metric])[metric].per_query
    b = evaluate_run_file(run_b, qrels_path, [metric])[metric].per_query
    return fisher_randomization(a, b, permutations=permutations, seed=seed)
