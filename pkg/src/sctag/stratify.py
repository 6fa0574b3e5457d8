"""Multilabel dataset splitting: iterative stratification (primary) and
labelset stratification (baseline), with per-label quality diagnostics.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LabelMatrix:
    """Sparse binary sample-label membership."""

    m: int
    q: int
    rows: list  # per sample: sorted tuple of label indices
    sample_ids: list

    @classmethod
    def from_documents(cls, docs, vocab):
        rows, ids = [], []
        for doc in docs:
            labels = []
            for t in sorted(doc.tags):
                if t not in vocab:
                    raise ValueError(f"unknown tag: {t!r}")
                labels.append(vocab.index[t])
            rows.append(tuple(sorted(labels)))
            ids.append(doc.post_id)
        return cls(m=len(rows), q=len(vocab), rows=rows, sample_ids=ids)

    @classmethod
    def from_rows(cls, rows, q, sample_ids=None):
        rows = [tuple(sorted(r)) for r in rows]
        if sample_ids is None:
            sample_ids = list(range(len(rows)))
        return cls(m=len(rows), q=q, rows=rows, sample_ids=list(sample_ids))

    def label_counts(self):
        counts = np.zeros(self.q, dtype=np.int64)
        for r in self.rows:
            counts[list(r)] += 1
        return counts


def build_label_matrix(docs, vocab) -> LabelMatrix:
    return LabelMatrix.from_documents(docs, vocab)


@dataclass
class Partition:
    assignment: np.ndarray  # per-sample subset index
    ratios: tuple
    names: tuple = ("train", "val", "test")

    def subset_indices(self, s):
        return np.flatnonzero(self.assignment == s)

    def sizes(self):
        return [int((self.assignment == s).sum()) for s in range(len(self.ratios))]


@dataclass
class StratReport:
    proportions: np.ndarray  # (n_subsets, q) positive proportion per subset
    corpus_proportions: np.ndarray  # (q,) c_j
    max_deviation: float
    mean_deviation: float
    size_deviation: list = field(default_factory=list)


def _check_ratios(ratios):
    ratios = tuple(float(r) for r in ratios)
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")
    return ratios


def iterative_stratify(Y: LabelMatrix, ratios, seed=0) -> Partition:
    """Greedy rare-label-first assignment.

    Repeatedly take the label with the fewest remaining positive samples and
    hand each of its samples to the subset with the greatest remaining demand
    for that label. Ties: larger remaining subset capacity, then lower subset
    index; among equally rare labels, lower label index. Samples are visited
    in a seed-permuted order so different seeds give different (but each
    reproducible) partitions.
    """
    ratios = _check_ratios(ratios)
    k = len(ratios)
    rng = np.random.default_rng(seed)
    assignment = np.full(Y.m, -1, dtype=np.int64)

    capacity = np.array([r * Y.m for r in ratios])  # desired subset sizes
    counts = Y.label_counts().astype(np.float64)
    demand = np.outer(ratios, counts)  # (k, q) desired positives per subset

    by_label = [[] for _ in range(Y.q)]
    order = rng.permutation(Y.m)
    for i in order:
        for j in Y.rows[i]:
            by_label[j].append(i)

    remaining = counts.copy()
    unassigned = Y.m
    while unassigned:
        active = np.flatnonzero(remaining > 0)
        if active.size == 0:
            break
        j = int(active[np.lexsort((active, remaining[active]))[0]])
        for i in by_label[j]:
            if assignment[i] >= 0:
                continue
            # subsets already at capacity are out of the running so subset
            # sizes stay within rounding of the target ratios
            cand = np.flatnonzero(capacity > 0)
            if cand.size == 0:
                cand = np.arange(k)
            d = demand[cand, j]
            best = int(cand[np.lexsort((cand, -capacity[cand], -d))[0]])
            assignment[i] = best
            capacity[best] -= 1
            for l in Y.rows[i]:
                demand[best, l] -= 1
                remaining[l] -= 1
            unassigned -= 1
        remaining[j] = 0  # all holders of j are now assigned
    # samples with no labels cannot occur, but keep the capacity fallback
    for i in np.flatnonzero(assignment < 0):
        best = int(np.argmax(capacity))
        assignment[i] = best
        capacity[best] -= 1
    return Partition(assignment=assignment, ratios=ratios)


def labelset_stratify(Y: LabelMatrix, ratios, seed=0) -> Partition:
    """Treat each distinct label combination as one class and stratify on it."""
    ratios = _check_ratios(ratios)
    k = len(ratios)
    rng = np.random.default_rng(seed)
    groups = {}
    for i, r in enumerate(Y.rows):
        groups.setdefault(r, []).append(i)
    assignment = np.full(Y.m, -1, dtype=np.int64)
    capacity = np.array([r * Y.m for r in ratios])
    singletons = []
    for labelset in sorted(groups):
        members = groups[labelset]
        if len(members) == 1:
            singletons.extend(members)
            continue
        members = [members[t] for t in rng.permutation(len(members))]
        # largest-remainder apportionment of the group across subsets
        exact = np.array(ratios) * len(members)
        base = np.floor(exact).astype(int)
        rem = len(members) - base.sum()
        extra = np.argsort(-(exact - base), kind="stable")[:rem]
        base[extra] += 1
        pos = 0
        for s in range(k):
            for i in members[pos : pos + base[s]]:
                assignment[i] = s
                capacity[s] -= 1
            pos += base[s]
    for i in singletons:
        best = int(np.argmax(capacity))
        assignment[i] = best
        capacity[best] -= 1
    return Partition(assignment=assignment, ratios=ratios)


def random_stratify(Y: LabelMatrix, ratios, seed=0) -> Partition:
    """Seeded uniform split honoring only subset sizes; the baseline the
    iterative method is measured against."""
    ratios = _check_ratios(ratios)
    rng = np.random.default_rng(seed)
    order = rng.permutation(Y.m)
    exact = np.array(ratios) * Y.m
    base = np.floor(exact).astype(int)
    extra = np.argsort(-(exact - base), kind="stable")[: Y.m - base.sum()]
    base[extra] += 1
    assignment = np.empty(Y.m, dtype=np.int64)
    pos = 0
    for s, n in enumerate(base):
        assignment[order[pos : pos + n]] = s
        pos += n
    return Partition(assignment=assignment, ratios=ratios)


def two_stage_split(Y: LabelMatrix, seed=0) -> Partition:
    """Two 99/1 iterative passes: (rest, test) then (train, val).

    Net ratios are about 98.01/0.99/1.00.
    """
    stage1 = iterative_stratify(Y, (0.99, 0.01), seed=seed)
    test_idx = stage1.subset_indices(1)
    rest_idx = stage1.subset_indices(0)
    sub = LabelMatrix.from_rows(
        [Y.rows[i] for i in rest_idx], Y.q, [Y.sample_ids[i] for i in rest_idx]
    )
    stage2 = iterative_stratify(sub, (0.99, 0.01), seed=seed + 1)
    assignment = np.empty(Y.m, dtype=np.int64)
    assignment[test_idx] = 2
    assignment[rest_idx[stage2.assignment == 0]] = 0
    assignment[rest_idx[stage2.assignment == 1]] = 1
    return Partition(assignment=assignment, ratios=(0.9801, 0.0099, 0.01))


def strat_report(Y: LabelMatrix, partition: Partition) -> StratReport:
    """Per-label subset proportions and their deviation from the corpus c_j."""
    k = len(partition.ratios)
    pos = np.zeros((k, Y.q))
    sizes = np.zeros(k)
    for i, r in enumerate(Y.rows):
        s = partition.assignment[i]
        sizes[s] += 1
        pos[s, list(r)] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        proportions = np.where(sizes[:, None] > 0, pos / np.maximum(sizes[:, None], 1), 0.0)
    c = Y.label_counts() / Y.m
    dev = np.abs(proportions - c[None, :])
    return StratReport(
        proportions=proportions,
        corpus_proportions=c,
        max_deviation=float(dev.max()),
        mean_deviation=float(dev.mean()),
        size_deviation=[float(abs(sizes[s] / Y.m - partition.ratios[s])) for s in range(k)],
    )


def write_partition(Y: LabelMatrix, partition: Partition, path):
    with open(path, "w", encoding="utf-8") as f:
        for sid, s in zip(Y.sample_ids, partition.assignment):
            f.write(f"{sid}\t{partition.names[s]}\n")


def read_partition(path, names=("train", "val", "test")):
    """sample_id -> subset name."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            sid, name = line.rstrip("\n").split("\t")
            out[int(sid)] = name
    return out
