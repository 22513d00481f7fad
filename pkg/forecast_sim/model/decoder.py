"""
Closed-form ridge decoder fitted per window on the lookback.

    W = (Z+^T Z+ + lambda I)^{-1} Z+^T (X - x_init),   Z+ = [z, 1]

The solve is a Cholesky factorization, differentiable in z and the targets,
so the horizon loss reaches the encoder through the fit.
"""

from dataclasses import dataclass

import numpy as np

from core.autodiff.ops import concat, spd_solve
from core.autodiff.tensor import Tensor, as_tensor
from core.errors import ContractError, DimensionError


@dataclass
class RidgeSolution:
    W: Tensor            # [..., d+1, C], last row is the bias
    lam: float

    @property
    def weights(self) -> np.ndarray:
        return self.W.data[..., :-1, :]

    @property
    def bias(self) -> np.ndarray:
        return self.W.data[..., -1, :]


def augment(z: Tensor) -> Tensor:
    """Append a ones column: [..., n, d] -> [..., n, d+1]."""
    return concat([z, Tensor(np.ones(z.shape[:-1] + (1,)))], axis=-1)


def ridge_fit(z_lookback, targets, lam: float = 1.0) -> RidgeSolution:
    z_lookback, targets = as_tensor(z_lookback), as_tensor(targets)
    if lam <= 0:
        raise ContractError(f"ridge lambda must be positive, got {lam}")
    if z_lookback.shape[-2] < 1:
        raise ContractError("ridge fit needs at least one lookback row")
    if z_lookback.shape[:-1] != targets.shape[:-1]:
        raise DimensionError("ridge_fit", z_lookback.shape, targets.shape)
    Z = augment(z_lookback)
    Zt = Z.swapaxes(-1, -2)
    gram = Zt @ Z + Tensor(lam * np.eye(Z.shape[-1]))
    return RidgeSolution(W=spd_solve(gram, Zt @ targets), lam=lam)


def decode(z, sol: RidgeSolution, x_init) -> Tensor:
    """Rows Z+ W + x_init."""
    z, x_init = as_tensor(z), as_tensor(x_init)
    if z.shape[-1] + 1 != sol.W.shape[-2]:
        raise DimensionError("decode", z.shape, sol.W.shape)
    offset = x_init.reshape(x_init.shape[:-1] + (1, x_init.shape[-1]))
    return augment(z) @ sol.W + offset


def ridge_objective_gradient(z_lookback: np.ndarray, targets: np.ndarray,
                             W: np.ndarray, lam: float) -> np.ndarray:
    """d/dW of ||Z+ W - Y||^2 + lambda ||W||^2; zero at the ridge solution."""
    Z = np.concatenate([z_lookback, np.ones(z_lookback.shape[:-1] + (1,))], axis=-1)
    residual = Z @ W - targets
    return 2.0 * (np.swapaxes(Z, -1, -2) @ residual + lam * W)
