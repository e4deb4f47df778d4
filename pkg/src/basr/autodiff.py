"""Dense-array numerics with reverse-mode differentiation.

A small tape-based engine over numpy float64 arrays. Forward ops build an
implicit graph; ``Tensor.backward()`` walks it in reverse topological order
and accumulates gradients into every reachable tensor that requires them.
Only the operations the model actually needs are provided; there is no
general broadcasting beyond what those ops use.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ShapeError

_grad_enabled = True
_debug_checks = False


@contextmanager
def no_grad():
    """Disable tape recording inside the block (forward-only evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf assertions after every forward op."""
    global _debug_checks
    _debug_checks = enabled


def _check_finite(op: str, out: np.ndarray) -> None:
    if _debug_checks and not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{op}: non-finite values in output")


class Tensor:
    """A float64 array plus the bookkeeping needed for reverse mode.

    ``backward`` may be called once per forward graph; intermediate grads
    start at zero each forward pass because the graph is rebuilt, while
    leaf tensors (Parameters) accumulate across calls until reset.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._backward: Callable[[np.ndarray], None] | None = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward: loss must be scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in order:
            if node.grad is None and (node.requires_grad or node._parents):
                node.grad = np.zeros_like(node.data)
        self.grad = self.grad + np.ones_like(self.data) if self.grad is not None else np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return mul(self, _wrap(-1.0))

    def __matmul__(self, other):
        return matmul(self, _wrap(other))


class Parameter(Tensor):
    """A named leaf tensor updated by the optimizer."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(op: str, data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    _check_finite(op, data)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad over the axes that numpy broadcasting expanded."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# elementwise -------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        if a.requires_grad or a._parents:
            a.grad += _unbroadcast(g, a.shape)
        if b.requires_grad or b._parents:
            b.grad += _unbroadcast(g, b.shape)

    return _make("add", data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        if a.requires_grad or a._parents:
            a.grad += _unbroadcast(g, a.shape)
        if b.requires_grad or b._parents:
            b.grad -= _unbroadcast(g, b.shape)

    return _make("sub", data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        if a.requires_grad or a._parents:
            a.grad += _unbroadcast(g * b.data, a.shape)
        if b.requires_grad or b._parents:
            b.grad += _unbroadcast(g * a.data, b.shape)

    return _make("mul", data, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data / b.data
    except ValueError:
        raise ShapeError(f"div: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        if a.requires_grad or a._parents:
            a.grad += _unbroadcast(g / b.data, a.shape)
        if b.requires_grad or b._parents:
            b.grad += _unbroadcast(-g * a.data / (b.data * b.data), b.shape)

    return _make("div", data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += g * (x.data > 0.0)

    return _make("relu", data, (x,), backward)


# linear algebra ----------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-D, got {a.shape} and {b.shape}")
    try:
        data = a.data @ b.data
    except ValueError:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        if a.requires_grad or a._parents:
            a.grad += _unbroadcast(g @ b.data.swapaxes(-1, -2), a.shape)
        if b.requires_grad or b._parents:
            b.grad += _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.shape)

    return _make("matmul", data, (a, b), backward)


def conv1d_time(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """1-D convolution over the time (first) axis, stride 1, same length.

    x: (T, c_in); w: (k, c_in, c_out) with odd k, zero-padded k//2 per side.
    """
    if x.ndim != 2 or w.ndim != 3:
        raise ShapeError(f"conv1d_time: expected (T,c_in) and (k,c_in,c_out), got {x.shape} and {w.shape}")
    k, c_in, c_out = w.shape
    if k % 2 != 1:
        raise ShapeError(f"conv1d_time: kernel width must be odd, got {k}")
    if x.shape[1] != c_in:
        raise ShapeError(f"conv1d_time: incompatible shapes {x.shape} and {w.shape}")
    t_len = x.shape[0]
    pad = k // 2
    padded = np.zeros((t_len + 2 * pad, c_in))
    padded[pad : pad + t_len] = x.data
    data = np.zeros((t_len, c_out))
    for j in range(k):
        data += padded[j : j + t_len] @ w.data[j]
    if b is not None:
        if b.shape != (c_out,):
            raise ShapeError(f"conv1d_time: bias shape {b.shape} does not match c_out {c_out}")
        data += b.data

    def backward(g):
        if x.requires_grad or x._parents:
            gpad = np.zeros_like(padded)
            for j in range(k):
                gpad[j : j + t_len] += g @ w.data[j].T
            x.grad += gpad[pad : pad + t_len]
        if w.requires_grad or w._parents:
            for j in range(k):
                w.grad[j] += padded[j : j + t_len].T @ g
        if b is not None and (b.requires_grad or b._parents):
            b.grad += g.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return _make("conv1d_time", data, parents, backward)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embedding_lookup: id out of range for table {table.shape}")
    data = table.data[ids]

    def backward(g):
        if table.requires_grad or table._parents:
            np.add.at(table.grad, ids.ravel(), g.reshape(-1, table.shape[1]))

    return _make("embedding_lookup", data, (table,), backward)


# shape manipulation ------------------------------------------------------


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += g.reshape(x.shape)

    return _make("reshape", data, (x,), backward)


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    data = x.data.transpose(axes)
    inverse = tuple(int(i) for i in np.argsort(axes))

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += g.transpose(inverse)

    return _make("transpose", data, (x,), backward)


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a 2-D tensor; duplicate indices accumulate gradient."""
    idx = np.asarray(idx)
    if x.ndim != 2:
        raise ShapeError(f"gather_rows: expected 2-D input, got {x.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ShapeError(f"gather_rows: index out of range for {x.shape}")
    data = x.data[idx]

    def backward(g):
        if x.requires_grad or x._parents:
            np.add.at(x.grad, idx.ravel(), g.reshape(-1, x.shape[1]))

    return _make("gather_rows", data, (x,), backward)


def concat0(tensors: Sequence[Tensor]) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat0: need at least one tensor")
    data = np.concatenate([t.data for t in tensors], axis=0)
    sizes = [t.shape[0] for t in tensors]

    def backward(g):
        start = 0
        for t, n in zip(tensors, sizes):
            if t.requires_grad or t._parents:
                t.grad += g[start : start + n]
            start += n

    return _make("concat0", data, tuple(tensors), backward)


# reductions and normalizers ----------------------------------------------


def sum_all(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum())

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += g * np.ones_like(x.data)

    return _make("sum_all", data, (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    data = np.asarray(x.data.mean())

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += (g / n) * np.ones_like(x.data)

    return _make("mean_all", data, (x,), backward)


def mean_over_time(x: Tensor) -> Tensor:
    """Mean along the first (time) axis."""
    if x.ndim < 1 or x.shape[0] == 0:
        raise ShapeError(f"mean_over_time: need a non-empty time axis, got {x.shape}")
    n = x.shape[0]
    data = x.data.mean(axis=0)

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += np.broadcast_to(g / n, x.shape)

    return _make("mean_over_time", data, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += data * (g - (g * data).sum(axis=axis, keepdims=True))

    return _make("softmax", data, (x,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean and unit variance, then affine."""
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError(f"layer_norm: affine shapes {gain.shape}/{bias.shape} do not match input {x.shape}")
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    data = xhat * gain.data + bias.data

    def backward(g):
        if x.requires_grad or x._parents:
            ghat = g * gain.data
            x.grad += inv * (
                ghat - ghat.mean(axis=-1, keepdims=True) - xhat * (ghat * xhat).mean(axis=-1, keepdims=True)
            )
        reduce_axes = tuple(range(x.ndim - 1))
        if gain.requires_grad or gain._parents:
            gain.grad += (g * xhat).sum(axis=reduce_axes)
        if bias.requires_grad or bias._parents:
            bias.grad += g.sum(axis=reduce_axes)

    return _make("layer_norm", data, (x, gain, bias), backward)


def nll(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-row negative log softmax probability of the target id.

    logits: (N, V); targets: (N,) ints. Uses log-sum-exp for stability.
    """
    targets = np.asarray(targets)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeError(f"nll: incompatible shapes {logits.shape} and {targets.shape}")
    m = logits.data.max(axis=-1, keepdims=True)
    e = np.exp(logits.data - m)
    z = e.sum(axis=-1, keepdims=True)
    lse = (m + np.log(z)).squeeze(-1)
    rows = np.arange(logits.shape[0])
    data = lse - logits.data[rows, targets]

    def backward(g):
        if logits.requires_grad or logits._parents:
            grad = (e / z) * g[:, None]
            grad[rows, targets] -= g
            logits.grad += grad

    return _make("nll", data, (logits,), backward)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log likelihood of targets under softmax(logits)."""
    return mean_all(nll(logits, targets))


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when rate is 0."""
    if rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    data = x.data * keep

    def backward(g):
        if x.requires_grad or x._parents:
            x.grad += g * keep

    return _make("dropout", data, (x,), backward)


# verification -------------------------------------------------------------


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def grad_check(f: Callable[[], Tensor], params: Sequence[Parameter], eps: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    f must be a deterministic scalar-valued closure over params. The error
    for each coordinate is |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    zero_grads(params)
    loss = f()
    loss.backward()
    analytic = [np.array(p.grad, copy=True) for p in params]
    worst = 0.0
    with no_grad():
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            aflat = a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = float(f().data)
                flat[i] = orig - eps
                lo = float(f().data)
                flat[i] = orig
                numeric = (hi - lo) / (2.0 * eps)
                err = abs(aflat[i] - numeric) / (abs(aflat[i]) + abs(numeric) + 1e-12)
                worst = max(worst, err)
    zero_grads(params)
    return worst
