"""The whole pipeline at desk scale: generate data, train passage vectors,
run word-based and fused feedback across iteration settings, and test
significance of the iterative-versus-batch difference.

Takes a minute or two of CPU; the corpus is trimmed to keep it quick.
"""

import numpy as np

from irflab import (
    EngineContext,
    FeedbackParams,
    FusionConfig,
    GeneratorConfig,
    RetrievalParams,
    SessionConfig,
    TrainConfig,
    evaluate_ranking,
    fisher_randomization,
    freeze_ranking,
    generate,
    train_pv_hdc,
)
from irflab.index import build_index
from irflab.simulation import run_irf_session

coll, queries, qrels = generate(GeneratorConfig(
    num_queries=20, passages_per_query_relevant=10, num_noise_passages=400,
    vocab_size=200, seed=3))
index = build_index(coll)
model = train_pv_hdc(coll, TrainConfig(dim=24, epochs=2, seed=3, mode="pv_hdc_corrupted"))
ctx = EngineContext(
    collection=coll, index=index,
    retrieval=RetrievalParams(mu=300.0),
    feedback=FeedbackParams(m=10, alpha_interp=0.5),
    embeddings=model,
)


def per_query_map(scfg):
    out = {}
    for q in queries:
        res = run_irf_session(q, qrels, scfg, ctx)
        out[q.query_id] = evaluate_ranking(
            freeze_ranking(res.frozen), qrels.relevant_ids(q.query_id), "map100")
    return out


settings = {(10, 1): None, (5, 2): None, (2, 5): None, (1, 10): None}
for n, iters in settings:
    scores = per_query_map(SessionConfig(per_iter=n, iterations=iters, rf_method="rm3"))
    settings[(n, iters)] = scores
    print(f"rm3 {n:>2}x{iters:<2}  MAP@100 = {np.mean(list(scores.values())):.4f}")

p = fisher_randomization(settings[(1, 10)], settings[(10, 1)])
print(f"\n1x10 vs 10x1 randomization p-value: {p:.4f}")

fused = per_query_map(SessionConfig(per_iter=5, iterations=2, rf_method="rm3",
                                    fusion=FusionConfig(lambda_sf=2.0, representation_mode="pvc")))
plain = settings[(5, 2)]
print(f"fused rm3+pvc 5x2 MAP@100 = {np.mean(list(fused.values())):.4f} "
      f"(plain {np.mean(list(plain.values())):.4f})")
