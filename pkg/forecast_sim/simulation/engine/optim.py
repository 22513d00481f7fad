"""
ADAM with bias correction and global-norm gradient clipping.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from core.autodiff.tensor import Tensor
from core.errors import ContractError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, Tensor], grads: Dict[str, Optional[np.ndarray]], state: AdamState,
              lr: float, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> AdamState:
    """One in-place update of every parameter; returns the advanced state."""
    missing = [name for name in params if grads.get(name) is None]
    if missing:
        raise ContractError(f"no gradient for parameters {missing}")
    beta1, beta2 = betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        p.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return state


class Adam:
    def __init__(self, params: Dict[str, Tensor], lr: float = 1e-3,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = AdamState()

    def step(self) -> None:
        grads = {name: p.grad for name, p in self.params.items()}
        adam_step(self.params, grads, self.state, self.lr, self.betas, self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


def global_grad_norm(params: Dict[str, Tensor]) -> float:
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad))
                             for p in params.values() if p.grad is not None)))


def clip_grad_norm(params: Dict[str, Tensor], max_norm: float) -> Tuple[float, bool]:
    """Rescale all gradients jointly so their global norm is at most max_norm."""
    norm = global_grad_norm(params)
    if max_norm <= 0 or norm <= max_norm:
        return norm, False
    scale = max_norm / (norm + 1e-12)
    for p in params.values():
        if p.grad is not None:
            p.grad *= scale
    return norm, True
