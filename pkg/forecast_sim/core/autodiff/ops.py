"""
Graph operations beyond the Tensor operators: products, scans, fused
normalizations, the Smooth L1 kernel and the symmetric positive-definite solve.
"""

from typing import List, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.autodiff.tensor import Tensor, as_tensor, broadcast_shape, check_axis
from core.errors import ContractError, DimensionError, NumericError


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product [..,m,k] x [..,k,n] -> [..,m,n]."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError("matmul", a.shape, b.shape) from None
    x, y = a.data, b.data

    def _backward(g):
        return (g @ np.swapaxes(y, -1, -2), np.swapaxes(x, -1, -2) @ g)

    return Tensor.from_op(x @ y, (a, b), "matmul", _backward)


def broadcast_to(x: Tensor, shape) -> Tensor:
    """Materialize x at a broadcast shape; the engine sums gradients back down."""
    shape = tuple(shape)
    broadcast_shape("broadcast_to", x.shape, shape)
    return Tensor.from_op(np.broadcast_to(x.data, shape).copy(), (x,), "broadcast_to",
                          lambda g: (g,))


def cumsum(x: Tensor, axis: int) -> Tensor:
    axis = check_axis(axis, x.ndim)

    def _backward(g):
        # reverse-direction cumulative sum of the incoming gradient
        return (np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis),)

    return Tensor.from_op(np.cumsum(x.data, axis=axis), (x,), "cumsum", _backward)


def flip(x: Tensor, axis: int) -> Tensor:
    axis = check_axis(axis, x.ndim)
    return Tensor.from_op(np.flip(x.data, axis), (x,), "flip",
                          lambda g: (np.flip(g, axis),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    axis = check_axis(axis, tensors[0].ndim)
    reference = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(reference) or any(
                t.shape[i] != reference[i] for i in range(len(reference)) if i != axis):
            raise DimensionError("concat", reference, t.shape)
    boundaries = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, boundaries, axis=axis))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor.from_op(data, tuple(tensors), "concat", _backward)


def layer_norm(x: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalize the last axis to zero mean and unit variance (no affine)."""
    data = x.data
    n = data.shape[-1]
    centered = data - data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def _backward(g):
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = (g * xhat).sum(axis=-1, keepdims=True) / n
        return (inv_std * (g - g_mean - xhat * gx_mean),)

    return Tensor.from_op(xhat, (x,), "layer_norm", _backward)


def softmax(x: Tensor) -> Tensor:
    """Row softmax over the last axis."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(y, (x,), "softmax", _backward)


def smooth_l1_core(e: Tensor, beta: float = 1.0) -> Tensor:
    """Elementwise Huber kernel: 0.5 e^2 / beta inside |e| < beta, |e| - 0.5 beta outside."""
    if beta <= 0:
        raise ContractError(f"beta must be positive, got {beta}")
    r = e.data
    inside = np.abs(r) < beta
    value = np.where(inside, 0.5 * r * r / beta, np.abs(r) - 0.5 * beta)

    def _backward(g):
        return (g * np.where(inside, r / beta, np.sign(r)),)

    return Tensor.from_op(value, (e,), "smooth_l1", _backward)


def elementwise(x: Tensor, fn: str, other=None) -> Tensor:
    """Dispatch one of the named elementwise/row operations."""
    unary = {
        "sin": lambda t: t.sin(),
        "cos": lambda t: t.cos(),
        "tanh": lambda t: t.tanh(),
        "gelu": lambda t: t.gelu(),
        "neg": lambda t: -t,
        "mean": lambda t: t.mean(),
        "softmax": softmax,
        "layernorm": layer_norm,
        "smooth_l1_core": smooth_l1_core,
    }
    binary = {
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
    }
    if fn in unary:
        return unary[fn](x)
    if fn in binary:
        if other is None:
            raise ContractError(f"{fn} needs a second operand")
        return binary[fn](x, as_tensor(other))
    raise ContractError(f"unknown elementwise function {fn!r}")


def _cholesky_factors(a: np.ndarray) -> List[tuple]:
    batch_shape = a.shape[:-2]
    factors = []
    for index in np.ndindex(*batch_shape):
        block = a[index]
        if not np.all(np.isfinite(block)):
            raise NumericError("non-finite entries in the system matrix")
        try:
            factors.append(cho_factor(block, lower=True, check_finite=False))
        except LinAlgError as exc:
            raise NumericError(f"system matrix is not positive definite: {exc}") from None
    return factors


def _solve_with(factors: List[tuple], rhs: np.ndarray) -> np.ndarray:
    out = np.empty_like(rhs)
    for factor, index in zip(factors, np.ndindex(*rhs.shape[:-2])):
        out[index] = cho_solve(factor, rhs[index], check_finite=False)
    return out


def spd_solve(a: Tensor, b: Tensor) -> Tensor:
    """Solve A X = B for symmetric positive-definite A [..,n,n], B [..,n,m].

    The backward pass solves the adjoint system with the same factorization:
    with L = A^{-1} G, dB = L and dA = -sym(L X^T).
    """
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or b.ndim != a.ndim \
            or b.shape[:-1] != a.shape[:-1]:
        raise DimensionError("spd_solve", a.shape, b.shape)
    if not np.all(np.isfinite(b.data)):
        raise NumericError("non-finite entries in the right-hand side")
    broadcast_shape("spd_solve", a.shape[:-2], b.shape[:-2])
    factors = _cholesky_factors(a.data)
    x = _solve_with(factors, b.data)

    def _backward(g):
        lam = _solve_with(factors, g)
        outer = lam @ np.swapaxes(x, -1, -2)
        return (-0.5 * (outer + np.swapaxes(outer, -1, -2)), lam)

    return Tensor.from_op(x, (a, b), "spd_solve", _backward)
