"""Dense tensors with tape-based reverse-mode differentiation.

Operations record themselves on the innermost active :class:`Tape` whenever
one of their inputs requires a gradient. Outside a tape nothing is recorded,
which is how inference runs.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..errors import ShapeError

_TAPES = []


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "node")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and arr.dtype.kind in "iub":
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_wrap(other, self.dtype)))

    def __rsub__(self, other):
        return add(_wrap(other, self.dtype), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


class Tape:
    """Append-only record of differentiable operations."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.remove(self)
        return False

    def record(self, out, parents, backward):
        out.node = len(self.nodes)
        self.nodes.append((out, parents, backward))

    def backward(self, loss, grad=None):
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that
        requires a gradient. Each recorded node is visited once, newest first."""
        if grad is None:
            if loss.data.size != 1:
                raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
            grad = np.ones_like(loss.data)
        loss.grad = np.asarray(grad, dtype=loss.dtype)
        for out, parents, fn in reversed(self.nodes):
            if out.grad is None:
                continue
            pgrads = fn(out.grad)
            for p, g in zip(parents, pgrads):
                if g is None or not p.requires_grad:
                    continue
                if g.shape != p.data.shape:
                    raise ShapeError(f"gradient shape {g.shape} != value shape {p.data.shape}")
                p.grad = g if p.grad is None else p.grad + g
        # intermediates keep no gradient; leaves keep theirs
        for out, _, _ in self.nodes:
            out.grad = None


def current_tape():
    return _TAPES[-1] if _TAPES else None


def _wrap(x, dtype=None):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=dtype))


def _make(data, parents, backward):
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(out, parents, backward)
    return out


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (undo numpy broadcasting)."""
    if g.shape == shape:
        return g
    nd = g.ndim - len(shape)
    if nd > 0:
        g = g.sum(axis=tuple(range(nd)))
    axes = tuple(k for k, n in enumerate(shape) if n == 1 and g.shape[k] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _bshape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# --- elementwise ------------------------------------------------------------------

def add(a, b):
    a, b = _wrap(a), _wrap(b)
    _bshape(a, b, "add")

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)
    return _make(a.data + b.data, (a, b), backward)


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    if not isinstance(b, Tensor):
        s = b
        return _make(a.data * s, (a,), lambda g: (g * s,))
    a = _wrap(a)
    _bshape(a, b, "mul")

    def backward(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)
    return _make(a.data * b.data, (a, b), backward)


def exp(a):
    y = np.exp(a.data)
    return _make(y, (a,), lambda g: (g * y,))


def log(a):
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


# plain floats so float32 inputs stay float32
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(a):
    """Exact GELU, x * Phi(x)."""
    x = a.data
    cdf = 0.5 * (1.0 + special.erf(x * _INV_SQRT2))

    def backward(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        return (g * (cdf + x * pdf)).astype(x.dtype, copy=False),
    return _make((x * cdf).astype(x.dtype, copy=False), (a,), backward)


def masked_fill(a, mask, value):
    mask = np.asarray(mask, dtype=bool)
    _bshape(a, Tensor(mask), "masked_fill")
    out = np.where(mask, np.asarray(value, dtype=a.dtype), a.data)

    def backward(g):
        return unbroadcast(np.where(mask, 0, g), a.shape).astype(a.dtype, copy=False),
    return _make(out, (a,), backward)


def dropout(a, p, training, rng):
    """Inverted dropout; identity when not training or ``p == 0``."""
    if not training or p <= 0:
        return a
    keep = (rng.random(a.shape) >= p).astype(a.dtype) / (1.0 - p)
    return _make(a.data * keep, (a,), lambda g: (g * keep,))


# --- shape ops ----------------------------------------------------------------------

def reshape(a, shape):
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {tuple(shape)}") from None
    return _make(out, (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    inv = tuple(np.argsort(axes))
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def swapaxes(a, i, j):
    axes = list(range(a.ndim))
    axes[i], axes[j] = axes[j], axes[i]
    return transpose(a, tuple(axes))


def getitem(a, idx):
    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return full,
    return _make(a.data[idx], (a,), backward)


def concat(tensors, axis=0):
    tensors = [_wrap(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat: incompatible shapes " + ", ".join(str(t.shape) for t in tensors)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))
    return _make(out, tuple(tensors), backward)


def broadcast_to(a, shape):
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise ShapeError(f"broadcast_to: {a.shape} -> {tuple(shape)}") from None
    return _make(out, (a,), lambda g: (unbroadcast(g, a.shape),))


def _scatter_rows(n_rows, idx, g):
    """Sum rows of ``g`` (..., d) into an (n_rows, d) array at flat ``idx``."""
    idx = idx.reshape(-1)
    g = g.reshape(idx.size, -1)
    if n_rows * idx.size <= 4_000_000:
        onehot = np.zeros((n_rows, idx.size), dtype=g.dtype)
        onehot[idx, np.arange(idx.size)] = 1
        return onehot @ g
    full = np.zeros((n_rows, g.shape[1]), dtype=g.dtype)
    np.add.at(full, idx, g)
    return full


def embedding(table, idx):
    """Row lookup ``table[idx]`` for an integer index array of any shape."""
    idx = np.asarray(idx)
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be 2-d, got {table.shape}")

    def backward(g):
        return _scatter_rows(table.shape[0], idx, g),
    return _make(table.data[idx], (table,), backward)


def gather_rows(table, idx):
    """Per-batch row gather: ``table`` (B, N, d), ``idx`` (B, S) -> (B, S, d)."""
    idx = np.asarray(idx)
    b = np.arange(table.shape[0])[:, None]

    def backward(g):
        B, N, _ = table.shape
        S = idx.shape[1]
        onehot = np.zeros((B, N, S), dtype=g.dtype)
        onehot[b, idx, np.arange(S)[None, :]] = 1
        return onehot @ g,
    return _make(table.data[b, idx], (table,), backward)


# --- reductions -----------------------------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    shape = a.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape).copy(),
    return _make(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward)


def mean(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else np.prod([a.shape[k] for k in np.atleast_1d(axis)])
    return mul(tsum(a, axis, keepdims), 1.0 / n)


# --- linear algebra -----------------------------------------------------------------------

def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-d operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2)) if a.requires_grad else None
        gb = None
        if b.requires_grad:
            if b.ndim == 2:
                # weight shared over leading axes: one flat product instead of a batched one
                gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return (None if ga is None else unbroadcast(ga, a.shape),
                None if gb is None else unbroadcast(gb, b.shape))
    return _make(out, (a, b), backward)


# --- normalisation / probabilities ----------------------------------------------------------

def softmax(a, axis=-1):
    x = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(x)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return y * (g - (g * y).sum(axis=axis, keepdims=True)),
    return _make(y, (a,), backward)


def log_softmax(a, axis=-1):
    x = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(x).sum(axis=axis, keepdims=True))
    y = x - lse

    def backward(g):
        return g - np.exp(y) * g.sum(axis=axis, keepdims=True),
    return _make(y, (a,), backward)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalise over the last axis, then scale and shift."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(f"layer_norm: gain {gamma.shape} / bias {beta.shape} vs features {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def backward(g):
        gxhat = g * gamma.data
        gx = inv * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        red = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=red), g.sum(axis=red)
    return _make(out, (x, gamma, beta), backward)


def cross_entropy(logits, targets, mask=None):
    """Mean negative log-likelihood of integer ``targets`` under
    ``softmax(logits)`` over the last axis, averaged over unmasked positions."""
    targets = np.asarray(targets)
    if logits.shape[:-1] != targets.shape:
        raise ShapeError(f"cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    x = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(x).sum(axis=-1, keepdims=True))
    logp = x - lse
    w = np.ones(targets.shape, dtype=logits.dtype) if mask is None else np.asarray(mask, dtype=logits.dtype)
    denom = max(float(w.sum()), 1.0)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -(picked * w).sum() / denom

    def backward(g):
        p = np.exp(logp)
        np.put_along_axis(p, targets[..., None], np.take_along_axis(p, targets[..., None], axis=-1) - 1.0, axis=-1)
        return (p * (w / denom)[..., None] * g).astype(logits.dtype, copy=False),
    return _make(np.asarray(loss, dtype=logits.dtype), (logits,), backward)
