"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Just enough operator coverage to backpropagate the negative-sum-rate loss
through the unfolded solver and its graph-convolutional weight generators:
elementwise arithmetic with numpy-style broadcasting, square/sqrt/logs, relu,
clamp, matrix products, reductions.

Usage: create a Tape, build the graph inside `with tape:`, call
`tape.backward(loss)` once. Leaf gradients land in Tensor.grad. Clamp and relu
use the zero subgradient exactly at their kinks.
"""

import numpy as np

_active_tape = None


class Tape:
    """Ordered record of primitive ops; single-use backward."""

    def __init__(self):
        self._ops = []  # (output, inputs, backward_fn)
        self._consumed = False

    def __enter__(self):
        global _active_tape
        if _active_tape is not None:
            raise RuntimeError("a tape is already active")
        _active_tape = self
        return self

    def __exit__(self, *exc):
        global _active_tape
        _active_tape = None
        return False

    def _record(self, out, inputs, backward_fn):
        self._ops.append((out, inputs, backward_fn))

    def backward(self, loss: "Tensor"):
        """Populate .grad of every requires_grad tensor reachable from loss."""
        if self._consumed:
            raise RuntimeError("tape already consumed; re-run the forward pass")
        if loss.data.shape != ():
            raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
        self._consumed = True
        grads = {id(loss): np.ones(())}
        for out, inputs, backward_fn in reversed(self._ops):
            g_out = grads.pop(id(out), None)
            if g_out is None:
                continue
            for t, g in zip(inputs, backward_fn(g_out)):
                if g is None or not t.requires_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                t._pending = grads[key]
        for out, inputs, _ in self._ops:
            for t in (out, *inputs):
                if t.requires_grad and t._pending is not None:
                    t.grad = t._pending.reshape(t.data.shape) if t._pending.shape != t.data.shape else t._pending
                    t._pending = None


class Tensor:
    """Dense real array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_pending")
    __array_priority__ = 100  # keep numpy from hijacking reflected operators

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._pending = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    grad = np.asarray(grad)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _make(out_data, inputs, backward_fn) -> Tensor:
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires)
    if requires and _active_tape is not None:
        _active_tape._record(out, inputs, backward_fn)
    return out


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * a.data / b.data ** 2, b.shape)))


def square(a):
    a = as_tensor(a)
    return _make(a.data ** 2, (a,), lambda g: (2.0 * a.data * g,))


def sqrt(a):
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return _make(out, (a,), lambda g: (0.5 * g / out,))


def log(a):
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise ValueError("log of nonpositive value")
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def log2(a):
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise ValueError("log2 of nonpositive value")
    return _make(np.log2(a.data), (a,), lambda g: (g / (a.data * np.log(2.0)),))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def clamp(a, lo: float, hi: float):
    """Saturate into [lo, hi]; zero subgradient at and beyond the bounds."""
    a = as_tensor(a)
    mask = (a.data > lo) & (a.data < hi)
    return _make(np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise ValueError("matmul supports 1-D/2-D operands only")

    def backward(g):
        ga = gb = None
        if a.data.ndim == 2 and b.data.ndim == 2:
            ga, gb = g @ b.data.T, a.data.T @ g
        elif a.data.ndim == 2 and b.data.ndim == 1:
            ga, gb = np.outer(g, b.data), a.data.T @ g
        elif a.data.ndim == 1 and b.data.ndim == 2:
            ga, gb = g @ b.data.T, np.outer(a.data, g)
        else:  # 1-D dot
            ga, gb = g * b.data, g * a.data
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward)


def tsum(a):
    a = as_tensor(a)
    return _make(np.sum(a.data), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def tmean(a):
    a = as_tensor(a)
    n = a.data.size
    return _make(np.mean(a.data), (a,),
                 lambda g: (np.broadcast_to(g / n, a.shape).copy(),))


def reshape(a, shape):
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))
