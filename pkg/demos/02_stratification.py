"""Why iterative stratification: rare labels survive the split.

Compares per-label proportion deviation (how far each subset drifts from the
corpus-wide label frequency) for random, labelset, and iterative splits on a
long-tailed label fixture.

Run: python3 demos/02_stratification.py
"""

import numpy as np

from sctag import stratify
from sctag.synth import longtail_label_rows

rows = longtail_label_rows(1000, 50, rarest=20, seed=0)
Y = stratify.LabelMatrix.from_rows(rows, 50)
ratios = (0.8, 0.1, 0.1)

print("method      mean_dev   max_dev   rare-tag positives per subset")
for name, fn in [
    ("random", stratify.random_stratify),
    ("labelset", stratify.labelset_stratify),
    ("iterative", stratify.iterative_stratify),
]:
    devs = []
    rare = None
    for seed in range(10):
        part = fn(Y, ratios, seed=seed)
        devs.append(stratify.strat_report(Y, part).mean_deviation)
        if seed == 0:
            rare = []
            for s in range(3):
                rare.append(sum(1 for i in part.subset_indices(s) if 49 in Y.rows[i]))
    report = stratify.strat_report(Y, fn(Y, ratios, seed=0))
    print(
        f"{name:<10}  {np.mean(devs):.5f}    {report.max_deviation:.5f}   {rare}"
    )

print("\nthe rarest tag has only 20 positives; a validation subset that loses")
print("them all cannot measure that tag's AUC at all.")
