"""Estimate expanded query models from judged passages.

Shows RM3, the distillation mixture, and a Rocchio vector update on a toy
corpus, and how the interpolation weight moves mass between the original
query and the feedback evidence.
"""

import json

from irflab import (
    FeedbackParams,
    Passage,
    PassageCollection,
    Query,
    build_index,
    estimate_distillation,
    estimate_rm3,
    rocchio_update,
    tfidf_vector,
)


def passage(pid, text):
    return Passage(passage_id=pid, doc_id=pid, text=text, tokens=tuple(text.split()))


collection = PassageCollection([
    passage("r1", "battery storage capacity battery grid"),
    passage("r2", "grid storage smooths solar battery output"),
    passage("n1", "cooking seasonal vegetables recipe"),
    passage("bg", "the corpus needs some background text battery text"),
])
index = build_index(collection)
query = Query(query_id="q", text="battery storage", tokens=("battery", "storage"))
rel_pool = [collection["r1"], collection["r2"]]
nr_pool = [collection["n1"]]

for alpha in (1.0, 0.5, 0.0):
    model = estimate_rm3(query, rel_pool, index, FeedbackParams(m=5, alpha_interp=alpha), mu=10.0)
    print(f"RM3 alpha={alpha}: {json.dumps({t: round(w, 3) for t, w in sorted(model.items())})}")

model = estimate_distillation(query, rel_pool, nr_pool, index,
                              FeedbackParams(m=5, alpha_interp=0.5, lambda_mix=0.5, lambda_nr=0.2))
print("\ndistillation:", {t: round(w, 3) for t, w in sorted(model.items(), key=lambda kv: -kv[1])})

qvec = {"battery": 1.0, "storage": 1.0}
updated = rocchio_update(qvec, rel_pool, nr_pool, index,
                         FeedbackParams(m=5, rocchio_alpha=1.0, rocchio_beta=0.75, rocchio_gamma=0.15))
print("\nrocchio vector:", {t: round(w, 3) for t, w in sorted(updated.items(), key=lambda kv: -kv[1])})
print("(compare with a relevant passage's tf-idf:",
      {t: round(w, 3) for t, w in tfidf_vector(collection["r1"], index).items()}, ")")
