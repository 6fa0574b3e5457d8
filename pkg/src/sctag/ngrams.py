"""Token n-gram features for the bag-of-n-grams logistic regression baseline.

Tokenizer: split on whitespace; every ASCII punctuation character is its own
token (code semantics live in punctuation).
"""

from collections import Counter

import numpy as np
from scipy import sparse

from .correction import PUNCTUATION_SET

MAX_VOCAB = 75_000
NGRAM_ORDERS = (1, 2, 3)


def tokenize(text):
    tokens = []
    word = []
    for c in text:
        if c.isspace() or c in PUNCTUATION_SET:
            if word:
                tokens.append("".join(word))
                word = []
            if c in PUNCTUATION_SET:
                tokens.append(c)
        else:
            word.append(c)
    if word:
        tokens.append("".join(word))
    return tokens


def iter_ngrams(tokens):
    for n in NGRAM_ORDERS:
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


class NgramVocab:
    """The most common training-set n-grams, capped at MAX_VOCAB.

    Ordered by descending count, ties lexicographic.
    """

    def __init__(self, grams_with_counts):
        self.grams = [g for g, _ in grams_with_counts]
        self.counts = [c for _, c in grams_with_counts]
        self.index = {g: i for i, g in enumerate(self.grams)}

    def __len__(self):
        return len(self.grams)

    @classmethod
    def from_texts(cls, texts, max_size=MAX_VOCAB):
        counts = Counter()
        for t in texts:
            counts.update(iter_ngrams(tokenize(t)))
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
        return cls(ranked)

    def to_dict(self):
        return {"grams": self.grams, "counts": self.counts}

    @classmethod
    def from_dict(cls, d):
        return cls(list(zip(d["grams"], d["counts"])))


def featurize(text, vocab: NgramVocab):
    """Sparse count vector of vocabulary n-grams; OOV n-grams are ignored."""
    counts = Counter(iter_ngrams(tokenize(text)))
    idx, vals = [], []
    for g, c in counts.items():
        j = vocab.index.get(g)
        if j is not None:
            idx.append(j)
            vals.append(c)
    return idx, vals


def featurize_matrix(texts, vocab: NgramVocab):
    """CSR matrix of n-gram counts, one row per text."""
    indptr = [0]
    indices, data = [], []
    for t in texts:
        idx, vals = featurize(t, vocab)
        order = np.argsort(idx)
        indices.extend(np.asarray(idx)[order] if idx else [])
        data.extend(np.asarray(vals)[order] if vals else [])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float32), indices, indptr),
        shape=(len(texts), len(vocab)),
    )
