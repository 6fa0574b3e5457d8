"""Corrective filters (snippet length, post score, tag frequency) and the
corpus statistics that motivated them.

Filter order is fixed: length, then score, then tag frequency. Tag counts
are distinct posts, not snippet occurrences.
"""

import statistics
import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field

PUNCTUATION_SET = frozenset(string.punctuation)  # the 32 ASCII punctuation chars


@dataclass
class FilterConfig:
    min_snippet_length: int = 10  # characters; drops lengths 9 and below
    min_score: int = 0
    min_tag_count: int = 1000  # positive posts per surviving tag

    def __post_init__(self):
        if self.min_snippet_length < 0 or self.min_tag_count < 0:
            raise ValueError("thresholds must be >= 0")


class TagVocabulary:
    """Ordered tag list surviving the frequency filter; name <-> index."""

    def __init__(self, tags):
        self.tags = list(tags)
        self.index = {t: i for i, t in enumerate(self.tags)}
        if len(self.index) != len(self.tags):
            raise ValueError("duplicate tags in vocabulary")

    def __len__(self):
        return len(self.tags)

    def __contains__(self, tag):
        return tag in self.index

    def __iter__(self):
        return iter(self.tags)

    def __eq__(self, other):
        return isinstance(other, TagVocabulary) and self.tags == other.tags


@dataclass
class CorpusStats:
    snippet_length_histogram: dict = field(default_factory=dict)
    punctuation_by_length: dict = field(default_factory=dict)  # length -> (mean, median)
    tags_per_post_histogram: dict = field(default_factory=dict)
    score_histogram: dict = field(default_factory=dict)
    tag_ranking: list = field(default_factory=list)  # [(tag, post count)] descending


def filter_snippet_length(snippets, cfg: FilterConfig):
    """Keep snippets of character length >= min_snippet_length, order preserved."""
    return [s for s in snippets if len(s) >= cfg.min_snippet_length]


def filter_score(doc, cfg: FilterConfig) -> bool:
    """Keep iff score >= min_score (zero-scored posts survive the default)."""
    return doc.score >= cfg.min_score


def rank_tags(docs):
    """Distinct-post count per tag, descending, ties lexicographic."""
    counts = Counter()
    for doc in docs:
        counts.update(set(doc.tags))
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def rank_and_filter_tags(docs, cfg: FilterConfig):
    """Build the surviving vocabulary and re-tag documents against it.

    Returns (TagVocabulary, list of surviving documents). Documents whose
    tag set is empty after intersection are dropped.
    """
    docs = list(docs)
    ranking = rank_tags(docs)
    surviving = [t for t, c in ranking if c >= cfg.min_tag_count]
    if not surviving:
        raise ValueError("no tag survives threshold")
    vocab = TagVocabulary(surviving)
    kept = []
    for doc in docs:
        tags = doc.tags & vocab.index.keys()
        if tags:
            doc.tags = tags
            kept.append(doc)
    return vocab, kept


def count_punctuation(text):
    return sum(1 for c in text if c in PUNCTUATION_SET)


def punctuation_stats(snippets):
    """Per snippet length: (mean, median) punctuation count."""
    by_length = defaultdict(list)
    for s in snippets:
        by_length[len(s)].append(count_punctuation(s))
    return {
        n: (statistics.fmean(counts), float(statistics.median(counts)))
        for n, counts in sorted(by_length.items())
    }


def compute_corpus_stats(docs, snippets=None) -> CorpusStats:
    """One pass over documents (and optionally raw snippets) for all five stats.

    When no separate snippet stream is given, documents' texts are split on
    the newline separators to recover snippet-level statistics.
    """
    docs = list(docs)
    if snippets is None:
        snippets = [s for d in docs for s in d.text.split("\n")]
    else:
        snippets = list(snippets)
    stats = CorpusStats()
    stats.snippet_length_histogram = dict(sorted(Counter(len(s) for s in snippets).items()))
    stats.punctuation_by_length = punctuation_stats(snippets)
    stats.tags_per_post_histogram = dict(sorted(Counter(len(d.tags) for d in docs).items()))
    stats.score_histogram = dict(sorted(Counter(d.score for d in docs).items()))
    stats.tag_ranking = rank_tags(docs)
    return stats


def export_stats(stats: CorpusStats, out_dir):
    """Plot-ready tabular export: one TSV per statistic, one row per bin."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    tables = {
        "snippet_length_histogram.tsv": [("length", "count"), *stats.snippet_length_histogram.items()],
        "punctuation_by_length.tsv": [
            ("length", "mean", "median"),
            *((n, m, md) for n, (m, md) in stats.punctuation_by_length.items()),
        ],
        "tags_per_post_histogram.tsv": [("tags", "count"), *stats.tags_per_post_histogram.items()],
        "score_histogram.tsv": [("score", "count"), *stats.score_histogram.items()],
        "tag_ranking.tsv": [("tag", "posts"), *stats.tag_ranking],
    }
    for name, rows in tables.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as f:
            for row in rows:
                f.write("\t".join(str(v) for v in row) + "\n")
    return sorted(tables)
