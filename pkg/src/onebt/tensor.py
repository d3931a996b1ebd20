"""Minimal reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional graph node recording how it was
produced. Ops build the graph eagerly; backward() walks it once in reverse
topological order and accumulates into .grad. Repeated backward calls keep
accumulating, so callers zero grads explicitly between steps.

Float32 is the working precision; pass float64 arrays in (e.g. for finite
difference checks) and every op stays in 64-bit.
"""

import math

import numpy as np
from scipy.special import erf

__all__ = [
    "Tensor", "Parameter", "ShapeError", "ConfigError", "NumericError",
    "matmul", "add", "mul", "scale", "gelu", "softmax_rows", "layer_norm",
    "mean_axis", "dropout", "concat_last_axis", "reshape", "swap_axes",
    "cross_entropy_label_smoothed", "backward",
]

_FLOAT_DTYPES = (np.float32, np.float64)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ShapeError(ValueError):
    """Operand shapes do not satisfy an op's contract."""


class ConfigError(ValueError):
    """A configuration value is out of its documented range."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where the op requires finite input."""


class _Node:
    """Graph record: which tensors fed an op and how to push grads back."""

    __slots__ = ("inputs", "backward_fn")

    def __init__(self, inputs, backward_fn):
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "node")

    def __init__(self, data, requires_grad=False):
        if isinstance(data, np.ndarray) and data.dtype in _FLOAT_DTYPES:
            arr = data
        else:
            arr = np.asarray(data, dtype=np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
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

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"


class Parameter:
    """A named trainable leaf."""

    __slots__ = ("name", "tensor", "trainable")

    def __init__(self, name, data, trainable=True):
        self.name = name
        self.tensor = Tensor(data, requires_grad=True)
        self.trainable = trainable

    @property
    def data(self):
        return self.tensor.data

    @data.setter
    def data(self, value):
        self.tensor.data = value

    @property
    def grad(self):
        return self.tensor.grad

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.tensor.shape})"


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, inputs, backward_fn):
    """Wrap an op result, attaching a node only if something upstream needs grads."""
    out = Tensor(data)
    if any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = _Node(inputs, backward_fn)
    return out


def _accumulate(tensor, grad):
    if tensor.grad is None:
        tensor.grad = grad.copy()
    else:
        tensor.grad = tensor.grad + grad


def _reduce_to(grad, shape):
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad


def _check_suffix_broadcast(name, a, b):
    """Elementwise ops allow equal shapes or one operand matching the other's suffix."""
    sa, sb = a.shape, b.shape
    if sa == sb:
        return
    small, big = (sa, sb) if len(sa) < len(sb) else (sb, sa)
    if len(small) == len(big) or big[len(big) - len(small):] != small:
        raise ShapeError(f"{name}: shapes {sa} and {sb} do not match as a trailing suffix")


# ---------------------------------------------------------------------------
# ops

def matmul(a, b):
    """Batched matrix product; leading axes broadcast, inner extents must agree."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-d, got {a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner extents differ, {a.shape} x {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul: batch axes of {a.shape} and {b.shape} do not broadcast") from e

    def bwd(g):
        ga = gb = None
        if a.requires_grad:
            ga = _reduce_to(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            gb = _reduce_to(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _make(out, (a, b), bwd)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_suffix_broadcast("add", a, b)
    out = a.data + b.data

    def bwd(g):
        ga = _reduce_to(g, a.shape) if a.requires_grad else None
        gb = _reduce_to(g, b.shape) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bwd)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_suffix_broadcast("mul", a, b)
    out = a.data * b.data

    def bwd(g):
        ga = _reduce_to(g * b.data, a.shape) if a.requires_grad else None
        gb = _reduce_to(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bwd)


def scale(a, s):
    """Multiply by a python scalar."""
    a = _as_tensor(a)
    s = float(s)
    out = a.data * s

    def bwd(g):
        return (g * s if a.requires_grad else None,)

    return _make(out, (a,), bwd)


def gelu(a):
    """Exact gelu, 0.5 * x * (1 + erf(x / sqrt(2)))."""
    a = _as_tensor(a)
    x = a.data
    inner = erf(x * _INV_SQRT2)
    out = 0.5 * x * (1.0 + inner)

    def bwd(g):
        if not a.requires_grad:
            return (None,)
        local = 0.5 * (1.0 + inner) + x * np.exp(-0.5 * x * x) * _INV_SQRT2PI
        return (g * local,)

    return _make(out, (a,), bwd)


def softmax_rows(a):
    """Softmax over the last axis, stabilised by subtracting the row max."""
    a = _as_tensor(a)
    if not np.all(np.isfinite(a.data)):
        raise NumericError("softmax_rows: input contains NaN or Inf")
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        if not a.requires_grad:
            return (None,)
        dot = (g * p).sum(axis=-1, keepdims=True)
        return (p * (g - dot),)

    return _make(p, (a,), bwd)


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalise the last axis to zero mean / unit variance, then affine."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(
            f"layer_norm: gain/bias must have shape ({d},), got {gain.shape} and {bias.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gain.data + bias.data

    def bwd(g):
        gx = gg = gb = None
        if gain.requires_grad:
            gg = (g * xhat).reshape(-1, d).sum(axis=0)
        if bias.requires_grad:
            gb = g.reshape(-1, d).sum(axis=0)
        if x.requires_grad:
            gh = g * gain.data
            # fused form: dx = inv * (gh - mean(gh) - xhat * mean(gh * xhat))
            m1 = gh.mean(axis=-1, keepdims=True)
            m2 = (gh * xhat).mean(axis=-1, keepdims=True)
            gx = inv * (gh - m1 - xhat * m2)
        return gx, gg, gb

    return _make(out, (x, gain, bias), bwd)


def mean_axis(x, axis):
    """Mean over one axis (the axis is removed)."""
    x = _as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"mean_axis: axis {axis} out of range for shape {x.shape}")
    axis = axis % x.ndim
    n = x.shape[axis]
    out = x.data.mean(axis=axis)

    def bwd(g):
        if not x.requires_grad:
            return (None,)
        return (np.broadcast_to(np.expand_dims(g, axis) / n, x.shape).copy(),)

    return _make(out, (x,), bwd)


def dropout(x, rate, training, rng=None):
    """Inverted dropout. Identity when not training or rate is 0."""
    x = _as_tensor(x)
    rate = float(rate)
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout: an rng is required when training with rate > 0")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / keep
    out = x.data * mask

    def bwd(g):
        return (g * mask if x.requires_grad else None,)

    return _make(out, (x,), bwd)


def concat_last_axis(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != b.ndim or a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_last_axis: shapes {a.shape} and {b.shape} differ off the last axis")
    out = np.concatenate([a.data, b.data], axis=-1)
    na = a.shape[-1]

    def bwd(g):
        ga = g[..., :na].copy() if a.requires_grad else None
        gb = g[..., na:].copy() if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bwd)


def reshape(x, shape):
    x = _as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: cannot view {x.shape} as {shape}") from e

    def bwd(g):
        return (g.reshape(x.shape) if x.requires_grad else None,)

    return _make(out, (x,), bwd)


def swap_axes(x, axis1, axis2):
    x = _as_tensor(x)
    out = np.swapaxes(x.data, axis1, axis2).copy()

    def bwd(g):
        return (np.swapaxes(g, axis1, axis2) if x.requires_grad else None,)

    return _make(out, (x,), bwd)


def cross_entropy_label_smoothed(logits, labels, smoothing=0.0):
    """Mean NLL against smoothed targets q = (1-s)*onehot + s/n_classes.

    logits: [b, n_classes]; labels: int array [b].
    """
    logits = _as_tensor(logits)
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be 2-d, got {logits.shape}")
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ShapeError(
            f"cross_entropy: labels must be 1-d of length {logits.shape[0]}, got {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ShapeError(f"cross_entropy: labels must be integers, got dtype {labels.dtype}")
    b, c = logits.shape
    if labels.min() < 0 or labels.max() >= c:
        raise ShapeError(f"cross_entropy: labels out of range [0, {c})")
    s = float(smoothing)
    if not 0.0 <= s < 1.0:
        raise ConfigError(f"cross_entropy: smoothing must be in [0, 1), got {s}")

    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    q = np.full((b, c), s / c, dtype=logits.dtype)
    q[np.arange(b), labels] += 1.0 - s
    loss = -(q * logp).sum(axis=-1).mean()

    def bwd(g):
        if not logits.requires_grad:
            return (None,)
        p = np.exp(logp)
        return ((p - q) * (g / b),)

    return _make(np.asarray(loss, dtype=logits.dtype), (logits,), bwd)


# ---------------------------------------------------------------------------
# backward pass

def backward(loss):
    """Accumulate d(loss)/d(leaf) into .grad over the graph below loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward: root must be a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    # iterative post-order topo sort; recursion would overflow on long graphs
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        t, expanded = stack.pop()
        if expanded:
            order.append(t)
            continue
        if id(t) in visited:
            continue
        visited.add(id(t))
        stack.append((t, True))
        if t.node is not None:
            for inp in t.node.inputs:
                if inp.requires_grad and id(inp) not in visited:
                    stack.append((inp, False))

    # the pass-local gradients live in their own map so that repeated
    # backward calls each contribute exactly one d(loss)/d(tensor)
    local = {id(loss): np.ones_like(loss.data)}
    for t in reversed(order):
        g = local.pop(id(t), None)
        if g is None:
            continue
        _accumulate(t, g)
        if t.node is None:
            continue
        for inp, gi in zip(t.node.inputs, t.node.backward_fn(g)):
            if gi is None:
                continue
            if id(inp) in local:
                local[id(inp)] = local[id(inp)] + gi
            else:
                local[id(inp)] = gi
