"""End-to-end walkthrough: synthetic post dump -> filters -> split -> CNN.

Run: python3 demos/01_pipeline.py
"""

import tempfile
from pathlib import Path

from sctag import evaluation, ingest, models, stratify
from sctag.correction import FilterConfig, filter_score, rank_and_filter_tags
from sctag.models import TrainSchedule, build_cnn, train
from sctag.nn import ArchConfig
from sctag.synth import fixture_dump

workdir = Path(tempfile.mkdtemp(prefix="sctag-demo-"))
dump = workdir / "posts.xml"
manifest = fixture_dump(str(dump), n_posts=500, seed=0)
print(f"wrote a 500-post dump to {dump}")

# Ingest: parse rows, keep <code> snippets of length >= 10, propagate the
# question's tags to every post in its thread.
cfg = FilterConfig(min_snippet_length=10, min_score=0, min_tag_count=10)
stats = ingest.IngestStats()
docs = list(ingest.ingest_dump(str(dump), cfg, stats))
print(f"ingested {len(docs)} documents ({stats.dropped_no_snippets} had no usable snippet)")

# Correction: drop negative-score posts, then tags with too few positives.
scored = [d for d in docs if filter_score(d, cfg)]
vocab, kept = rank_and_filter_tags(scored, cfg)
print(f"after score/tag filters: {len(kept)} documents, tags = {vocab.tags}")

# Split: iterative stratification keeps rare tags present in every subset.
Y = stratify.build_label_matrix(kept, vocab)
part = stratify.iterative_stratify(Y, (0.8, 0.1, 0.1), seed=0)
tr, va, te = ([kept[i] for i in part.subset_indices(s)] for s in range(3))
print(f"split sizes: {part.sizes()}")

# Train a small character-level CNN and score the held-out subset.
arch = ArchConfig(output_dim=len(vocab), filter_widths=(3, 5), filters_per_width=16,
                  dense_sizes=(64, 64))
bundle = train(build_cnn(arch, vocab, seed=0), tr, va, TrainSchedule(epochs=15, lr=3e-3, seed=0))
report = evaluation.evaluate_model(bundle, te)
print(f"held-out mean AUC {report.auc_mean:.3f} over {len(report.per_tag_auc)} tags")

for text in ("for i in range(3): print(i)", "SELECT id FROM users;"):
    top = models.predict_probs(bundle, text)[:3]
    print(f"  {text!r} -> " + ", ".join(f"{t}={p:.2f}" for t, p in top))
