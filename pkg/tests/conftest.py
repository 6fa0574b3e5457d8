import pytest

from sctag.correction import TagVocabulary
from sctag.models import TrainSchedule, build_cnn, train
from sctag.nn import ArchConfig
from sctag.synth import pattern_corpus

SMALL_ARCH = dict(filter_widths=(3, 5), filters_per_width=16, dense_sizes=(64, 64))


@pytest.fixture(scope="session")
def small_corpus():
    docs, tags = pattern_corpus(100, 10, seed=0)
    return docs, TagVocabulary(tags)


@pytest.fixture(scope="session")
def trained_cnn(small_corpus):
    docs, vocab = small_corpus
    arch = ArchConfig(output_dim=len(vocab), **SMALL_ARCH)
    bundle = build_cnn(arch, vocab, seed=0)
    return train(bundle, docs, [], TrainSchedule(epochs=30, lr=3e-3, seed=0))
