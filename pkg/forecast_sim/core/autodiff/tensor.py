"""
Reverse-mode differentiable array.

This module provides the Tensor node used for every trainable quantity in the
forecaster:
1. 64-bit storage backed by numpy
2. Graph recording for the elementwise, reduction and shape operations
3. Topological backward pass with gradient accumulation into leaves
"""

import threading
from contextlib import contextmanager
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ContractError, DimensionError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_K = 0.044715

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Evaluate without recording a graph (test-time adaptation, validation)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def broadcast_shape(op: str, *shapes) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(*shapes))
    except ValueError:
        raise DimensionError(op, *shapes) from None


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def check_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise IndexError(f"axis {axis} out of range for tensor of rank {ndim}")
    return axis % ndim


class Tensor:
    """N-dimensional float64 array node of a differentiable computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "_op")
    # numpy defers mixed ndarray/Tensor arithmetic to the Tensor operators
    __array_ufunc__ = None

    def __init__(self, data: ArrayLike, requires_grad: bool = False,
                 _children: Tuple["Tensor", ...] = (), _op: str = ""):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.array(data, dtype=np.float64, copy=True, order="C")
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._prev = _children
        self._backward: Optional[BackwardFn] = None
        self._op = _op

    # ------------------------------------------------------------------ basics

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self._op or 'leaf'})"

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Tuple["Tensor", ...], op: str,
                backward: BackwardFn) -> "Tensor":
        """Wrap an op result, recording the edge only when a parent needs grads."""
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(data, dtype=np.float64)
        out.grad = None
        out._op = op
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._prev = parents
            out._backward = backward
        else:
            out.requires_grad = False
            out._prev = ()
            out._backward = None
        return out

    # ---------------------------------------------------------------- backward

    def _topological_order(self):
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> None:
        """Populate .grad of every requires_grad leaf with d(self)/d(leaf)."""
        if self.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractError("backward() called on a tensor that does not require grad")

        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(self._topological_order()):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                # leaves accumulate across calls until zero_grad
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._prev, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pg = unbroadcast(pg, parent.shape)
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg

    # ------------------------------------------------------------- arithmetic

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        broadcast_shape("add", self.shape, other.shape)
        return Tensor.from_op(self.data + other.data, (self, other), "add",
                              lambda g: (g, g))

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        broadcast_shape("sub", self.shape, other.shape)
        return Tensor.from_op(self.data - other.data, (self, other), "sub",
                              lambda g: (g, -g))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        broadcast_shape("mul", self.shape, other.shape)
        a, b = self.data, other.data
        return Tensor.from_op(a * b, (self, other), "mul",
                              lambda g: (g * b, g * a))

    __rmul__ = __mul__

    def __truediv__(self, other: Union[float, int]) -> "Tensor":
        if isinstance(other, Tensor):
            raise ContractError("division is only defined by a constant scalar")
        return self * (1.0 / float(other))

    def __neg__(self) -> "Tensor":
        return Tensor.from_op(-self.data, (self,), "neg", lambda g: (-g,))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from core.autodiff.ops import matmul
        return matmul(self, as_tensor(other))

    # ------------------------------------------------------------- reductions

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        shape = self.shape
        if axis is not None:
            axis = check_axis(axis, self.ndim)

        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum", _backward)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        count = self.size if axis is None else self.shape[check_axis(axis, self.ndim)]
        return self.sum(axis=axis, keepdims=keepdims) / count

    # ------------------------------------------------------------------ shape

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        try:
            data = self.data.reshape(shape)
        except ValueError:
            raise DimensionError("reshape", original, shape) from None
        return Tensor.from_op(data, (self,), "reshape", lambda g: (g.reshape(original),))

    def swapaxes(self, axis1: int, axis2: int) -> "Tensor":
        axis1 = check_axis(axis1, self.ndim)
        axis2 = check_axis(axis2, self.ndim)
        return Tensor.from_op(np.swapaxes(self.data, axis1, axis2), (self,), "swapaxes",
                              lambda g: (np.swapaxes(g, axis1, axis2),))

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)

    def __getitem__(self, index) -> "Tensor":
        shape = self.shape

        parts = index if isinstance(index, tuple) else (index,)
        basic = all(isinstance(p, (int, slice, type(Ellipsis), type(None))) for p in parts)

        def _backward(g):
            full = np.zeros(shape)
            if basic:
                full[index] += g
            else:
                np.add.at(full, index, g)
            return (full,)

        return Tensor.from_op(self.data[index], (self,), "getitem", _backward)

    # ------------------------------------------------------------ elementwise

    def sin(self) -> "Tensor":
        x = self.data
        return Tensor.from_op(np.sin(x), (self,), "sin", lambda g: (g * np.cos(x),))

    def cos(self) -> "Tensor":
        x = self.data
        return Tensor.from_op(np.cos(x), (self,), "cos", lambda g: (-g * np.sin(x),))

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)
        return Tensor.from_op(y, (self,), "tanh", lambda g: (g * (1.0 - y * y),))

    def gelu(self) -> "Tensor":
        """GeLU, tanh approximation."""
        x = self.data
        t = np.tanh(_GELU_C * (x + _GELU_K * x ** 3))

        def _backward(g):
            dt = (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_K * x * x)
            return (g * (0.5 * (1.0 + t) + 0.5 * x * dt),)

        return Tensor.from_op(0.5 * x * (1.0 + t), (self,), "gelu", _backward)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: ArrayLike) -> Tensor:
    """A trainable leaf."""
    return Tensor(data, requires_grad=True)
