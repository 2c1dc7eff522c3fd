"""Train the embedding flavors on a synthetic corpus and compare passage
representations.

Trains a skip-gram model and both paragraph-vector variants, then checks
that passages of the same planted topic sit closer in embedding space than
passages of different topics (averaged over pairs; single pairs are noisy
at this corpus size).
"""

import numpy as np

from irflab import GeneratorConfig, TrainConfig, cosine, generate, passage_vector, train_pv_hdc, train_skipgram
from irflab.index import build_index

coll, queries, qrels = generate(GeneratorConfig(
    num_queries=15, passages_per_query_relevant=8, num_noise_passages=150,
    vocab_size=200, seed=4))
index = build_index(coll)

sg = train_skipgram(coll, TrainConfig(dim=32, epochs=10, seed=1, mode="skipgram"))
pv = train_pv_hdc(coll, TrainConfig(dim=32, epochs=10, seed=1, mode="pv_hdc"))
pvc = train_pv_hdc(coll, TrainConfig(dim=32, epochs=10, seed=1, mode="pv_hdc_corrupted"))
print(f"vocabulary {len(sg.vocab)} terms; skip-gram epoch losses "
      f"{np.round(sg.metadata['epoch_losses'], 3)}")


def mean_cosines(model, mode):
    within, cross = [], []
    for qa, qb in ((0, 3), (1, 7), (2, 11), (5, 9)):
        for j in range(4):
            a = passage_vector(coll[f"p{qa:03d}r{j:02d}"], model, mode, index)
            b = passage_vector(coll[f"p{qa:03d}r{j + 4:02d}"], model, mode, index)
            o = passage_vector(coll[f"p{qb:03d}r{j:02d}"], model, mode, index)
            within.append(cosine(a, b))
            cross.append(cosine(a, o))
    return np.mean(within), np.mean(cross)


print(f"\n{'mode':10s} {'same-topic':>12s} {'cross-topic':>12s}")
for mode, model in (("avg_w2v", sg), ("idf_w2v", sg), ("pv", pv), ("pvc", pvc)):
    w, c = mean_cosines(model, mode)
    print(f"{mode:10s} {w:12.3f} {c:12.3f}")
