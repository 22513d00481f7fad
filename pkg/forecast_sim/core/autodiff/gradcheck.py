"""Central finite-difference checks for the autodiff engine."""

from typing import Callable, Dict

import numpy as np

from core.autodiff.tensor import Tensor, no_grad


def numerical_gradient(loss_fn: Callable[[], Tensor], param: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central differences of loss_fn with respect to every entry of param."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            upper = loss_fn().item()
            flat[i] = original - h
            lower = loss_fn().item()
            flat[i] = original
            out[i] = (upper - lower) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradient_check(loss_fn: Callable[[], Tensor], params: Dict[str, Tensor],
                   h: float = 1e-5, zero_tolerance: float = 1e-9) -> Dict[str, float]:
    """Relative error between backward() and finite differences, per named parameter.

    Each parameter is scaled by max(|analytic|, |numeric|, 1e-8). A parameter
    whose analytic and numeric gradients are both within zero_tolerance of
    zero everywhere (a bias that softmax cancels) reports 0.0.
    """
    for p in params.values():
        p.zero_grad()
    loss_fn().backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    numeric = {name: numerical_gradient(loss_fn, p, h) for name, p in params.items()}
    errors = {}
    for name in params:
        if max(np.max(np.abs(analytic[name])), np.max(np.abs(numeric[name]))) <= zero_tolerance:
            errors[name] = 0.0
        else:
            errors[name] = relative_error(analytic[name], numeric[name])
    return errors
