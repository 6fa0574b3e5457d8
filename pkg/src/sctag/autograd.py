"""Minimal reverse-mode autodiff over numpy arrays.

Float32 is the training dtype; float64 is used for gradient checking.
Every op builds a node recording its parents and a closure that pushes the
output gradient back to them. `backward()` walks the graph in reverse
topological order from a scalar loss.
"""

import numpy as np
from scipy.special import expit

SIGMOID_CLAMP = 1e-7


class GraphFault(RuntimeError):
    """Raised on structural faults: bad shapes, NaN values, empty pooling."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def check_finite(self):
        if not np.all(np.isfinite(self.data)):
            raise GraphFault(f"non-finite values in tensor {self.name or '<anon>'}")

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.ndim != 0:
            raise GraphFault("backward() requires a scalar loss")
        order = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            order.append(t)

        visit(self)
        self.grad = np.ones((), dtype=self.data.dtype)
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, name={self.name})"


def parameter(array, name=None):
    return Tensor(np.asarray(array), requires_grad=True, name=name)


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def add(a, b):
    out_data = a.data + b.data

    def bwd(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return Tensor(out_data, parents=(a, b), backward_fn=bwd)


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def embedding(indices, table):
    """Row lookup: out[..., :] = table[indices[...]]."""
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() >= table.data.shape[0]):
        raise GraphFault("embedding index out of range")
    out_data = table.data[idx]

    def bwd(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, idx.reshape(-1), g.reshape(-1, table.data.shape[1]))

    return Tensor(out_data, parents=(table,), backward_fn=bwd)


def conv1d(x, weight, bias):
    """Valid cross-correlation over the time axis.

    x: (B, L, C_in); weight: (w, C_in, C_out); bias: (C_out,).
    Returns (B, L-w+1, C_out).
    """
    w = weight.data.shape[0]
    L = x.data.shape[1]
    if L < w:
        raise GraphFault(f"input length {L} shorter than filter width {w}")
    L_out = L - w + 1
    out_data = np.tile(bias.data, (x.data.shape[0], L_out, 1)).astype(x.data.dtype)
    for k in range(w):
        out_data += x.data[:, k : k + L_out, :] @ weight.data[k]

    def bwd(g):
        if weight.requires_grad:
            if weight.grad is None:
                weight.grad = np.zeros_like(weight.data)
            for k in range(w):
                # (Cin, B*Lout) @ (B*Lout, Cout)
                xk = x.data[:, k : k + L_out, :].reshape(-1, x.data.shape[2])
                weight.grad[k] += xk.T @ g.reshape(-1, g.shape[2])
        _accumulate(bias, g.sum(axis=(0, 1)))
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for k in range(w):
                gx[:, k : k + L_out, :] += g @ weight.data[k].T
            _accumulate(x, gx)

    return Tensor(out_data, parents=(x, weight, bias), backward_fn=bwd)


def relu(x):
    out_data = np.maximum(x.data, 0)

    def bwd(g):
        _accumulate(x, g * (x.data > 0))

    return Tensor(out_data, parents=(x,), backward_fn=bwd)


def dense(x, weight, bias):
    if x.data.shape[-1] != weight.data.shape[0]:
        raise GraphFault(
            f"dense shape mismatch: input {x.data.shape} vs weight {weight.data.shape}"
        )
    out_data = x.data @ weight.data + bias.data

    def bwd(g):
        _accumulate(weight, x.data.reshape(-1, x.data.shape[-1]).T @ g.reshape(-1, g.shape[-1]))
        _accumulate(bias, g.reshape(-1, g.shape[-1]).sum(axis=0))
        _accumulate(x, g @ weight.data.T)

    return Tensor(out_data, parents=(x, weight, bias), backward_fn=bwd)


def sigmoid(x):
    """Logistic activation, output clamped away from {0, 1} for loss stability."""
    out_data = np.clip(expit(x.data), SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)

    def bwd(g):
        _accumulate(x, g * out_data * (1.0 - out_data))

    return Tensor(out_data, parents=(x,), backward_fn=bwd)


def sum_over_time(x, mask):
    """Column sums over valid time positions.

    x: (B, T, C) or (T, C); mask: boolean flags of matching leading shape.
    Summation runs over exactly the selected rows, so appending masked
    padding leaves the result bit-identical.
    """
    squeeze = x.data.ndim == 2
    data = x.data[None] if squeeze else x.data
    m = np.asarray(mask, dtype=bool)
    if squeeze:
        m = m[None]
    if m.shape != data.shape[:2]:
        raise GraphFault(f"mask shape {m.shape} does not match input {data.shape[:2]}")
    if not m.any(axis=1).all():
        raise GraphFault("empty pooling window")
    out_data = np.empty((data.shape[0], data.shape[2]), dtype=data.dtype)
    for b in range(data.shape[0]):
        out_data[b] = data[b][m[b]].sum(axis=0)
    if squeeze:
        out_data = out_data[0]

    def bwd(g):
        if x.requires_grad:
            gb = g[None] if squeeze else g
            gx = np.zeros_like(data)
            for b in range(data.shape[0]):
                gx[b][m[b]] = gb[b]
            _accumulate(x, gx[0] if squeeze else gx)

    return Tensor(out_data, parents=(x,), backward_fn=bwd)


def mean_over_time(x, mask):
    """Masked mean over the time axis; order-free pooling for the LR baseline."""
    s = sum_over_time(x, mask)
    m = np.asarray(mask, dtype=bool)
    counts = m.sum(axis=-1).astype(x.data.dtype)
    denom = counts[:, None] if s.data.ndim == 2 else counts
    out_data = s.data / denom

    def bwd(g):
        _accumulate(s, g / denom)

    return Tensor(out_data, parents=(s,), backward_fn=bwd)


def concat(tensors, axis=-1):
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def bwd(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accumulate(t, piece)

    return Tensor(out_data, parents=tuple(tensors), backward_fn=bwd)


def batchnorm(x, gamma, beta, running_mean, running_var, train, momentum=0.1, eps=1e-5):
    """Batch normalization over the batch axis of a (B, F) tensor.

    Train mode normalizes by batch statistics and updates the running
    arrays in place; inference mode normalizes by the running statistics.
    """
    if x.data.ndim != 2:
        raise GraphFault("batchnorm expects a (batch, features) tensor")
    B = x.data.shape[0]
    if train:
        if B < 2:
            raise GraphFault("batchnorm train mode needs batch size >= 2")
        mean = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * B / max(B - 1, 1)
    else:
        mean = running_mean.astype(x.data.dtype)
        var = running_var.astype(x.data.dtype)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * invstd
    out_data = gamma.data * xhat + beta.data

    def bwd(g):
        _accumulate(gamma, (g * xhat).sum(axis=0))
        _accumulate(beta, g.sum(axis=0))
        if x.requires_grad:
            if train:
                gxhat = g * gamma.data
                gx = (
                    invstd
                    / B
                    * (B * gxhat - gxhat.sum(axis=0) - xhat * (gxhat * xhat).sum(axis=0))
                )
            else:
                gx = g * gamma.data * invstd
            _accumulate(x, gx)

    return Tensor(out_data, parents=(x, gamma, beta), backward_fn=bwd)


def bce_loss(p, y):
    """Mean binary cross-entropy: -[y ln p + (1-y) ln(1-p)] averaged elementwise."""
    yv = np.asarray(y, dtype=p.data.dtype)
    if yv.shape != p.data.shape:
        raise GraphFault(f"bce shape mismatch: {p.data.shape} vs {yv.shape}")
    n = p.data.size
    out_data = np.asarray(
        -(yv * np.log(p.data) + (1.0 - yv) * np.log1p(-p.data)).sum() / n,
        dtype=p.data.dtype,
    )

    def bwd(g):
        _accumulate(p, g * (-(yv / p.data) + (1.0 - yv) / (1.0 - p.data)) / n)

    return Tensor(out_data, parents=(p,), backward_fn=bwd)
