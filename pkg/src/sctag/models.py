"""The three classifiers (embedding CNN, embedding LR, n-gram LR):
construction, training, prediction, and bundle save/load.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import autograd as ag
from . import bundle as bundle_io
from . import codec, ngrams
from .correction import TagVocabulary
from .nn import Adam, ArchConfig, CnnTagger, EmbedLrTagger, pad_batch


@dataclass
class TrainSchedule:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    patience: int = 3  # early stop on validation BCE
    seed: int = 0


@dataclass
class ModelBundle:
    kind: str  # cnn | embed_lr | ngram_lr
    model: object
    vocab: TagVocabulary
    codec_version: int = codec.CODEC_VERSION
    training_meta: dict = field(default_factory=dict)

    @property
    def q(self):
        return len(self.vocab)


class NgramLr:
    """q independent logistic outputs over n-gram counts; one-layer network."""

    kind = "ngram_lr"

    def __init__(self, ngram_vocab, output_dim, seed=0):
        self.ngram_vocab = ngram_vocab
        rng = np.random.default_rng(seed)
        limit = np.sqrt(3.0 / max(len(ngram_vocab), 1))
        self.W = rng.uniform(-limit, limit, size=(len(ngram_vocab), output_dim)).astype(np.float32)
        self.b = np.zeros(output_dim, dtype=np.float32)

    def predict_matrix(self, X):
        z = X @ self.W + self.b
        return np.clip(expit(z), ag.SIGMOID_CLAMP, 1.0 - ag.SIGMOID_CLAMP)

    def predict_batch(self, texts):
        return self.predict_matrix(ngrams.featurize_matrix(texts, self.ngram_vocab))


def labels_matrix(docs, vocab, dtype=np.float32):
    y = np.zeros((len(docs), len(vocab)), dtype=dtype)
    for i, doc in enumerate(docs):
        for t in doc.tags:
            y[i, vocab.index[t]] = 1.0
    return y


def build_cnn(arch: ArchConfig, vocab: TagVocabulary, seed=0) -> ModelBundle:
    if arch.output_dim != len(vocab):
        raise ValueError("arch output_dim must equal vocabulary size")
    return ModelBundle(kind="cnn", model=CnnTagger(arch, seed=seed), vocab=vocab)


def _length_buckets(docs, batch_size):
    """Batches of near-equal lengths to bound padding waste; no singleton
    batch leaves batch normalization without statistics."""
    order = sorted(range(len(docs)), key=lambda i: (len(docs[i].text), i))
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2].extend(batches.pop())
    return batches


def _epoch_loss(model, docs, y, batches, min_len, train, opt=None):
    total, n = 0.0, 0
    for b in batches:
        seqs = [codec.encode(docs[i].text) for i in b]
        idx, lens = pad_batch(seqs, min_len)
        p = model.forward(idx, lens, train=train)
        loss = ag.bce_loss(p, y[b])
        if opt is not None:
            opt.zero_grad()
            loss.backward()
            opt.step()
        total += float(loss.data) * len(b)
        n += len(b)
    return total / n


def train(bundle: ModelBundle, train_docs, val_docs, schedule: TrainSchedule = None) -> ModelBundle:
    """Mini-batch BCE training with early stopping on validation loss."""
    if not train_docs:
        raise ValueError("empty train set")
    schedule = schedule or TrainSchedule()
    if bundle.kind == "ngram_lr":
        return _train_ngram(bundle, train_docs, val_docs, schedule)
    model = bundle.model
    vocab = bundle.vocab
    y_train = labels_matrix(train_docs, vocab)
    y_val = labels_matrix(val_docs, vocab) if val_docs else None
    min_len = model.arch.min_input_length if bundle.kind == "cnn" else 1
    opt = Adam(model.params.values(), lr=schedule.lr)
    rng = np.random.default_rng(schedule.seed)
    batches = _length_buckets(train_docs, schedule.batch_size)
    curve = []
    best_val, best_state, patience_left = np.inf, None, schedule.patience
    for epoch in range(schedule.epochs):
        epoch_batches = [batches[i] for i in rng.permutation(len(batches))]
        tr = _epoch_loss(model, train_docs, y_train, epoch_batches, min_len, train=True, opt=opt)
        entry = {"epoch": epoch, "train_bce": tr}
        if val_docs:
            # validation always runs in batch-norm inference mode
            vl = _epoch_loss(
                model, val_docs, y_val, _length_buckets(val_docs, schedule.batch_size),
                min_len, train=False,
            )
            entry["val_bce"] = vl
            if vl < best_val - 1e-6:
                best_val, patience_left = vl, schedule.patience
                best_state = {k: p.data.copy() for k, p in model.params.items()}
                best_state["_running"] = {k: v.copy() for k, v in model.running.items()}
            else:
                patience_left -= 1
        curve.append(entry)
        if val_docs and patience_left <= 0:
            break
    if best_state is not None:
        for k, v in best_state.pop("_running").items():
            model.running[k][...] = v
        for k, p in model.params.items():
            p.data[...] = best_state[k]
    bundle.training_meta = {"seed": schedule.seed, "epochs": len(curve), "loss_curve": curve}
    return bundle


def _train_ngram(bundle, train_docs, val_docs, schedule):
    model = bundle.model
    y = labels_matrix(train_docs, bundle.vocab)
    X = ngrams.featurize_matrix([d.text for d in train_docs], model.ngram_vocab)
    Xv = (
        ngrams.featurize_matrix([d.text for d in val_docs], model.ngram_vocab)
        if val_docs
        else None
    )
    yv = labels_matrix(val_docs, bundle.vocab) if val_docs else None
    rng = np.random.default_rng(schedule.seed)
    # Adam on the single layer; gradients via sparse matmul
    mW = np.zeros_like(model.W)
    vW = np.zeros_like(model.W)
    mb = np.zeros_like(model.b)
    vb = np.zeros_like(model.b)
    t = 0
    curve = []
    best_val, best_state, patience_left = np.inf, None, schedule.patience
    n = X.shape[0]
    for epoch in range(schedule.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, schedule.batch_size):
            b = order[s : s + schedule.batch_size]
            Xb, yb = X[b], y[b]
            p = model.predict_matrix(Xb)
            total += float(
                -(yb * np.log(p) + (1 - yb) * np.log1p(-p)).sum() / p.size
            ) * len(b)
            g = (p - yb) / p.size
            gW = np.asarray(Xb.T @ g)
            gb = g.sum(axis=0)
            t += 1
            for param, grad, m, v in ((model.W, gW, mW, vW), (model.b, gb, mb, vb)):
                m *= 0.9
                m += 0.1 * grad
                v *= 0.999
                v += 0.001 * grad * grad
                mhat = m / (1 - 0.9**t)
                vhat = v / (1 - 0.999**t)
                param -= (schedule.lr * mhat / (np.sqrt(vhat) + 1e-8)).astype(np.float32)
        entry = {"epoch": epoch, "train_bce": total / n}
        if val_docs is not None and len(val_docs):
            pv = model.predict_matrix(Xv)
            vl = float(-(yv * np.log(pv) + (1 - yv) * np.log1p(-pv)).mean())
            entry["val_bce"] = vl
            if vl < best_val - 1e-6:
                best_val, patience_left = vl, schedule.patience
                best_state = (model.W.copy(), model.b.copy())
            else:
                patience_left -= 1
        curve.append(entry)
        if val_docs is not None and len(val_docs) and patience_left <= 0:
            break
    if best_state is not None:
        model.W, model.b = best_state
    bundle.training_meta = {"seed": schedule.seed, "epochs": len(curve), "loss_curve": curve}
    return bundle


def train_ngram_lr(train_docs, val_docs, vocab, schedule: TrainSchedule = None, seed=0) -> ModelBundle:
    schedule = schedule or TrainSchedule()
    nv = ngrams.NgramVocab.from_texts([d.text for d in train_docs])
    model = NgramLr(nv, len(vocab), seed=seed)
    b = ModelBundle(kind="ngram_lr", model=model, vocab=vocab)
    return train(b, train_docs, val_docs, schedule)


def train_embed_lr(train_docs, val_docs, vocab, schedule: TrainSchedule = None, seed=0) -> ModelBundle:
    model = EmbedLrTagger(len(vocab), seed=seed)
    b = ModelBundle(kind="embed_lr", model=model, vocab=vocab)
    return train(b, train_docs, val_docs, schedule or TrainSchedule())


def predict_matrix(bundle: ModelBundle, texts, batch_size=64):
    """(n, q) probability matrix, inference mode."""
    out = np.empty((len(texts), bundle.q), dtype=np.float32)
    for s in range(0, len(texts), batch_size):
        out[s : s + batch_size] = bundle.model.predict_batch(texts[s : s + batch_size])
    return out


def predict_probs(bundle: ModelBundle, text):
    """All tags with probabilities, sorted descending (vocab order on ties)."""
    p = predict_matrix(bundle, [text])[0]
    order = np.argsort(-p, kind="stable")
    return [(bundle.vocab.tags[j], float(p[j])) for j in order]


def save_bundle(b: ModelBundle, path):
    config = {
        "kind": b.kind,
        "vocab": b.vocab.tags,
        "codec_version": b.codec_version,
        "training_meta": b.training_meta,
    }
    tensors = {}
    if b.kind == "cnn":
        config["arch"] = b.model.arch.to_dict()
        tensors = {k: p.data for k, p in b.model.params.items()}
        tensors.update({f"running/{k}": v for k, v in b.model.running.items()})
    elif b.kind == "embed_lr":
        tensors = {k: p.data for k, p in b.model.params.items()}
    elif b.kind == "ngram_lr":
        config["ngram_vocab"] = b.model.ngram_vocab.to_dict()
        tensors = {"W": b.model.W, "b": b.model.b}
    else:
        raise ValueError(f"unknown bundle kind {b.kind}")
    bundle_io.write_bundle(path, config, tensors)


def load_bundle(path) -> ModelBundle:
    config, tensors = bundle_io.read_bundle(path)
    vocab = TagVocabulary(config["vocab"])
    kind = config["kind"]
    if kind == "cnn":
        arch = ArchConfig.from_dict(config["arch"])
        model = CnnTagger(arch, seed=0)
        for k, p in model.params.items():
            p.data = tensors[k].astype(np.float32)
        for k in model.running:
            model.running[k] = tensors[f"running/{k}"].astype(np.float64)
    elif kind == "embed_lr":
        model = EmbedLrTagger(len(vocab), seed=0)
        for k, p in model.params.items():
            p.data = tensors[k].astype(np.float32)
    elif kind == "ngram_lr":
        nv = ngrams.NgramVocab.from_dict(config["ngram_vocab"])
        model = NgramLr(nv, len(vocab), seed=0)
        model.W = tensors["W"].astype(np.float32)
        model.b = tensors["b"].astype(np.float32)
    else:
        raise bundle_io.BundleError(f"unknown model kind {kind!r}")
    return ModelBundle(
        kind=kind,
        model=model,
        vocab=vocab,
        codec_version=config.get("codec_version", 1),
        training_meta=config.get("training_meta", {}),
    )
