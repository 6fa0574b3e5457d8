"""Network assembly for the character-level tagger and its baselines."""

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from . import codec
from .autograd import GraphFault, Tensor, parameter


@dataclass
class ArchConfig:
    """Architecture knobs for the convolutional tagger.

    embed_dim and conv_stack_depth are fixed by the architecture; the
    rest stay configurable for experiments.
    """

    output_dim: int
    embed_dim: int = 16
    filter_widths: tuple = (3, 5, 7, 9)
    filters_per_width: int = 64
    conv_stack_depth: int = 2
    dense_sizes: tuple = (512, 512)

    def __post_init__(self):
        if self.embed_dim != 16:
            raise ValueError("embed_dim is fixed at 16")
        if self.conv_stack_depth != 2:
            raise ValueError("conv_stack_depth is fixed at 2")
        if self.output_dim < 1:
            raise ValueError("output_dim must be positive")
        self.filter_widths = tuple(int(w) for w in self.filter_widths)
        self.dense_sizes = tuple(int(s) for s in self.dense_sizes)
        if len(self.dense_sizes) != 2:
            raise ValueError("exactly two dense layers")

    @property
    def min_input_length(self):
        # two stacked valid convolutions of width w need 2w-1 positions
        return 2 * max(self.filter_widths) - 1

    def to_dict(self):
        return {
            "output_dim": self.output_dim,
            "embed_dim": self.embed_dim,
            "filter_widths": list(self.filter_widths),
            "filters_per_width": self.filters_per_width,
            "conv_stack_depth": self.conv_stack_depth,
            "dense_sizes": list(self.dense_sizes),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            output_dim=d["output_dim"],
            embed_dim=d["embed_dim"],
            filter_widths=tuple(d["filter_widths"]),
            filters_per_width=d["filters_per_width"],
            conv_stack_depth=d["conv_stack_depth"],
            dense_sizes=tuple(d["dense_sizes"]),
        )


def _uniform_fanin(rng, shape, fan_in, dtype):
    limit = np.sqrt(3.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def pad_batch(index_seqs, min_length):
    """Right-pad index sequences with the unknown index to a common length.

    Returns (indices (B, L) int64, lengths (B,) int64); every sequence is
    padded at least to min_length so stacked valid convolutions fit.
    """
    lengths = np.array([max(len(s), 1) for s in index_seqs], dtype=np.int64)
    padded_lengths = np.maximum(lengths, min_length)
    L = int(padded_lengths.max())
    out = np.full((len(index_seqs), L), codec.UNKNOWN_INDEX, dtype=np.int64)
    for i, s in enumerate(index_seqs):
        out[i, : len(s)] = s
    # padding positions participate in embedding/convolution but are
    # excluded from pooling via the returned lengths
    return out, np.maximum(lengths, min_length)


class CnnTagger:
    """Fig-7-style model: embedding, per-width stacked conv pairs with ReLU,
    sum-over-time pooling, two batch-normalized dense layers, logistic output.
    """

    kind = "cnn"

    def __init__(self, arch: ArchConfig, seed=0, dtype=np.float32):
        self.arch = arch
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        p = {}
        p["embed"] = parameter(
            rng.uniform(-0.05, 0.05, size=(codec.VOCAB_SIZE, arch.embed_dim)).astype(self.dtype),
            name="embed",
        )
        for w in arch.filter_widths:
            c = arch.filters_per_width
            p[f"conv{w}_1_w"] = parameter(
                _uniform_fanin(rng, (w, arch.embed_dim, c), w * arch.embed_dim, self.dtype),
                name=f"conv{w}_1_w",
            )
            p[f"conv{w}_1_b"] = parameter(np.zeros(c, dtype=self.dtype), name=f"conv{w}_1_b")
            p[f"conv{w}_2_w"] = parameter(
                _uniform_fanin(rng, (w, c, c), w * c, self.dtype), name=f"conv{w}_2_w"
            )
            p[f"conv{w}_2_b"] = parameter(np.zeros(c, dtype=self.dtype), name=f"conv{w}_2_b")
        pooled = arch.filters_per_width * len(arch.filter_widths)
        sizes = [pooled, *arch.dense_sizes]
        for i in range(2):
            p[f"dense{i}_w"] = parameter(
                _uniform_fanin(rng, (sizes[i], sizes[i + 1]), sizes[i], self.dtype),
                name=f"dense{i}_w",
            )
            p[f"dense{i}_b"] = parameter(np.zeros(sizes[i + 1], dtype=self.dtype), name=f"dense{i}_b")
            p[f"bn{i}_gamma"] = parameter(np.ones(sizes[i + 1], dtype=self.dtype), name=f"bn{i}_gamma")
            p[f"bn{i}_beta"] = parameter(np.zeros(sizes[i + 1], dtype=self.dtype), name=f"bn{i}_beta")
        p["out_w"] = parameter(
            _uniform_fanin(rng, (sizes[-1], arch.output_dim), sizes[-1], self.dtype), name="out_w"
        )
        p["out_b"] = parameter(np.zeros(arch.output_dim, dtype=self.dtype), name="out_b")
        self.params = p
        self.running = {
            f"bn{i}_{k}": np.zeros(arch.dense_sizes[i], dtype=np.float64)
            if k == "mean"
            else np.ones(arch.dense_sizes[i], dtype=np.float64)
            for i in range(2)
            for k in ("mean", "var")
        }

    def forward(self, indices, lengths, train):
        """indices: (B, L) int64 padded batch; lengths: valid prefix per row."""
        x = ag.embedding(indices, self.params["embed"])
        pooled = []
        for w in self.arch.filter_widths:
            h = ag.relu(ag.conv1d(x, self.params[f"conv{w}_1_w"], self.params[f"conv{w}_1_b"]))
            h = ag.relu(ag.conv1d(h, self.params[f"conv{w}_2_w"], self.params[f"conv{w}_2_b"]))
            valid = np.maximum(lengths - 2 * (w - 1), 1)
            T = h.data.shape[1]
            mask = np.arange(T)[None, :] < valid[:, None]
            pooled.append(ag.sum_over_time(h, mask))
        z = ag.concat(pooled, axis=-1)
        for i in range(2):
            z = ag.dense(z, self.params[f"dense{i}_w"], self.params[f"dense{i}_b"])
            z = ag.batchnorm(
                z,
                self.params[f"bn{i}_gamma"],
                self.params[f"bn{i}_beta"],
                self.running[f"bn{i}_mean"],
                self.running[f"bn{i}_var"],
                train=train,
            )
            z = ag.relu(z)
        z = ag.dense(z, self.params["out_w"], self.params["out_b"])
        return ag.sigmoid(z)

    def predict_batch(self, texts):
        seqs = [codec.encode(t) for t in texts]
        idx, lengths = pad_batch(seqs, self.arch.min_input_length)
        return self.forward(idx, lengths, train=False).data


class EmbedLrTagger:
    """Baseline: 8-dim character embedding, mean-over-time pooling, one
    logistic layer. Order-free by construction.
    """

    kind = "embed_lr"
    embed_dim = 8

    def __init__(self, output_dim, seed=0, dtype=np.float32):
        self.output_dim = output_dim
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.params = {
            "embed": parameter(
                rng.uniform(-0.05, 0.05, size=(codec.VOCAB_SIZE, self.embed_dim)).astype(self.dtype),
                name="embed",
            ),
            "out_w": parameter(
                _uniform_fanin(rng, (self.embed_dim, output_dim), self.embed_dim, self.dtype),
                name="out_w",
            ),
            "out_b": parameter(np.zeros(output_dim, dtype=self.dtype), name="out_b"),
        }
        self.running = {}
        self.arch = None

    def forward(self, indices, lengths, train=False):
        x = ag.embedding(indices, self.params["embed"])
        mask = np.arange(indices.shape[1])[None, :] < lengths[:, None]
        z = ag.mean_over_time(x, mask)
        return ag.sigmoid(ag.dense(z, self.params["out_w"], self.params["out_b"]))

    def predict_batch(self, texts):
        seqs = [codec.encode(t) for t in texts]
        idx, lengths = pad_batch(seqs, 1)
        return self.forward(idx, lengths, train=False).data


class Adam:
    """Adaptive-moment optimizer; deterministic given its state."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise GraphFault(f"NaN gradient in parameter {p.name or i}")
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            mhat = self.m[i] / (1 - self.beta1**self.t)
            vhat = self.v[i] / (1 - self.beta2**self.t)
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
