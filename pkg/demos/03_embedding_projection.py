"""What the character embedding learns: a 2-D projection.

Trains a small CNN on a synthetic corpus, projects its 16-dim character
embedding onto the top two principal components, and prints coordinates for a
few character classes so the grouping is visible without a plotting library.

Run: python3 demos/03_embedding_projection.py
"""

from sctag.correction import TagVocabulary
from sctag.evaluation import embedding_projection_2d
from sctag.models import TrainSchedule, build_cnn, train
from sctag.nn import ArchConfig
from sctag.synth import pattern_corpus

docs, tags = pattern_corpus(300, 10, seed=0)
vocab = TagVocabulary(tags)
arch = ArchConfig(output_dim=len(vocab), filter_widths=(3, 5), filters_per_width=16,
                  dense_sizes=(64, 64))
bundle = train(build_cnn(arch, vocab, seed=0), docs, [], TrainSchedule(epochs=20, lr=3e-3, seed=0))

labels, points, degenerate = embedding_projection_2d(bundle)
coords = dict(zip(labels, points))
if degenerate:
    print("warning: covariance is degenerate; coordinates are not meaningful")

for title, chars in [
    ("digits", "0123456789"),
    ("lowercase (used by the corpus)", "abcdefgh"),
    ("punctuation", "(){};="),
]:
    print(title)
    for c in chars:
        x, y = coords[c]
        print(f"  {c!r}: ({x:+.3f}, {y:+.3f})")
