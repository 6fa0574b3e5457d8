"""Per-tag ROC/AUC, summary reports, top-1 accuracy, throughput, and the
2-D character-embedding projection.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import codec
from .models import labels_matrix, predict_matrix

CHARS_PER_SLOC = 38  # average characters per source line


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass
class EvalReport:
    per_tag_auc: dict  # tag -> float or None (undefined)
    auc_mean: float
    auc_median: float
    auc_stdev: float
    auc_histogram: np.ndarray  # 100 bins of width 0.01 over [0, 1]
    top1_accuracy: float
    n_undefined: int
    per_tag_counts: dict = field(default_factory=dict)  # tag -> (positives, negatives)
    split: str = "test"


def roc_auc(scores, labels):
    """Rank-statistic AUC with half credit for ties; None when one class
    is absent. O(n log n)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores/labels length mismatch")
    P = int(labels.sum())
    N = len(labels) - P
    if P == 0 or N == 0:
        return None
    ranks = rankdata(scores)  # average ranks implement the tie credit
    return float((ranks[labels == 1].sum() - P * (P + 1) / 2) / (P * N))


def roc_curve(scores, labels) -> RocCurve:
    """Tie-grouped ROC points from (0,0) to (1,1); trapezoidal area equals
    the rank-statistic AUC."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    P = int(labels.sum())
    N = len(labels) - P
    if P == 0 or N == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    # group tied scores into single steps
    boundary = np.flatnonzero(np.diff(s)) + 1
    tp = np.concatenate([[0], np.add.reduceat(y, np.concatenate([[0], boundary])).cumsum()])
    fp = np.concatenate([[0], np.add.reduceat(1 - y, np.concatenate([[0], boundary])).cumsum()])
    tpr = tp / P
    fpr = fp / N
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, auc=auc)


def top1_hits(probs, y):
    """Boolean per row: argmax-probability tag (first index on ties) is a
    true tag."""
    top = np.argmax(probs, axis=1)
    return y[np.arange(len(top)), top] > 0


def evaluate_model(bundle, test_docs, split="test") -> EvalReport:
    if not test_docs:
        raise ValueError("empty test set")
    probs = predict_matrix(bundle, [d.text for d in test_docs])
    y = labels_matrix(test_docs, bundle.vocab)
    per_tag = {}
    counts = {}
    defined = []
    for j, tag in enumerate(bundle.vocab.tags):
        a = roc_auc(probs[:, j], y[:, j])
        per_tag[tag] = a
        counts[tag] = (int(y[:, j].sum()), int(len(test_docs) - y[:, j].sum()))
        if a is not None:
            defined.append(a)
    defined = np.asarray(defined)
    hist, _ = np.histogram(defined, bins=100, range=(0.0, 1.0))
    return EvalReport(
        per_tag_auc=per_tag,
        auc_mean=float(defined.mean()) if defined.size else float("nan"),
        auc_median=float(np.median(defined)) if defined.size else float("nan"),
        auc_stdev=float(defined.std(ddof=0)) if defined.size else float("nan"),
        auc_histogram=hist,
        top1_accuracy=float(top1_hits(probs, y).mean()),
        n_undefined=len(per_tag) - defined.size,
        per_tag_counts=counts,
        split=split,
    )


def top1_accuracy(bundle, test_docs) -> float:
    probs = predict_matrix(bundle, [d.text for d in test_docs])
    y = labels_matrix(test_docs, bundle.vocab)
    return float(top1_hits(probs, y).mean())


def chars_to_sloc(chars_per_sec):
    return chars_per_sec / CHARS_PER_SLOC


def throughput_bench(bundle, texts, repetitions=3):
    """Median end-to-end prediction throughput (encoding included, disk
    excluded). Returns (chars_per_sec, sloc_per_sec)."""
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if not texts:
        raise ValueError("empty corpus")
    total_chars = sum(len(t) for t in texts)
    rates = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        predict_matrix(bundle, texts)
        dt = time.perf_counter() - t0
        rates.append(total_chars / dt)
    cps = float(np.median(rates))
    return cps, chars_to_sloc(cps)


def embedding_projection_2d(bundle):
    """PCA of the character embedding table onto its top-2 variance
    directions; one labeled point per codec row."""
    if bundle.kind != "cnn":
        raise ValueError("projection requires a cnn bundle")
    E = bundle.model.params["embed"].data.astype(np.float64)
    centered = E - E.mean(axis=0)
    cov = centered.T @ centered / E.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    degenerate = eigvals[-1] <= 1e-12
    basis = eigvecs[:, ::-1][:, :2]
    pts = centered @ basis
    labels = list(codec.TABLE) + ["<unk>"]
    return labels, pts, degenerate


def format_report(report: EvalReport) -> str:
    lines = []
    for tag, a in report.per_tag_auc.items():
        p, n = report.per_tag_counts[tag]
        lines.append(f"{tag}\t{'undefined' if a is None else f'{a:.6f}'}\t{p}\t{n}")
    lines += [
        "# summary",
        f"# split\t{report.split}",
        f"# auc_mean\t{report.auc_mean:.6f}",
        f"# auc_median\t{report.auc_median:.6f}",
        f"# auc_stdev\t{report.auc_stdev:.6f}",
        f"# n_undefined\t{report.n_undefined}",
        f"# top1_accuracy\t{report.top1_accuracy:.6f}",
    ]
    return "\n".join(lines) + "\n"
