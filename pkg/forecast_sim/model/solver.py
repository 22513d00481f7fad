"""
Patched Euler solver for the latent integral z = integral of alpha.

Each patch of S positions is anchored at its last element: a direct estimate
u_{S-1} from one head, integrated backwards with the derivative head,

    z_j = u_{S-1} - sum_{k=j+1}^{S-1} dudt_k,    z_{S-1} = u_{S-1},

with a unit step. The result passes through an output head.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from core.autodiff.ops import concat, cumsum, flip
from core.autodiff.tensor import Tensor
from core.errors import ConfigError, NumericError
from core.utils.seeding import substream
from model.layers import MLP, Module

logger = logging.getLogger(__name__)


class SolverParams(Module):
    """Direct-estimate, derivative and output heads (d -> d -> d each)."""

    def __init__(self, d: int, patch_length: int, seed: int):
        if patch_length < 1:
            raise ConfigError(f"patch_length must be >= 1, got {patch_length}")
        self.d = d
        self.patch_length = patch_length
        self.u_head = MLP(d, d, d, substream(seed, 'init', 'solver', 'u_head'))
        self.dudt_head = MLP(d, d, d, substream(seed, 'init', 'solver', 'dudt_head'))
        self.out_head = MLP(d, d, d, substream(seed, 'init', 'solver', 'out_head'))


@dataclass
class IntegralSequence:
    z: Tensor            # after out_head, [..., L+H, d]
    u: Tensor            # direct estimates
    dudt: Tensor         # derivative estimates
    integral: Tensor     # patched integral before out_head

    @property
    def length(self) -> int:
        return self.z.shape[-2]


def _check_divisible(total: int, patch_length: int) -> int:
    if patch_length < 1 or total % patch_length:
        raise ConfigError(f"sequence length L+H={total} is not divisible by patch length S={patch_length}")
    return total // patch_length


def patch_anchor(i: int, patch_length: int, total: Optional[int] = None) -> int:
    """Last index of the patch containing position i."""
    if total is not None:
        _check_divisible(total, patch_length)
        if not 0 <= i < total:
            raise IndexError(f"position {i} outside [0, {total})")
    return (i // patch_length + 1) * patch_length - 1


def integrate_patches(u: Tensor, dudt: Tensor, patch_length: int) -> Tensor:
    """Anchor-at-end reverse cumulative sum, vectorized over patches."""
    total, d = u.shape[-2], u.shape[-1]
    n_patches = _check_divisible(total, patch_length)
    S = patch_length
    patched = u.shape[:-2] + (n_patches, S, d)
    u_p = u.reshape(patched)
    g = flip(-dudt.reshape(patched), axis=-2)
    steps = concat([u_p[..., S - 1:S, :], g[..., :S - 1, :]], axis=-2)
    integral = flip(cumsum(steps, axis=-2), axis=-2)
    return integral.reshape(u.shape)


def solve(alpha: Tensor, params: SolverParams) -> IntegralSequence:
    u = params.u_head(alpha)
    dudt = params.dudt_head(alpha)
    integral = integrate_patches(u, dudt, params.patch_length)
    z = params.out_head(integral)
    if not np.all(np.isfinite(z.data)):
        raise NumericError("solver produced non-finite latent values")
    return IntegralSequence(z=z, u=u, dudt=dudt, integral=integral)


def continuity_residual(u: Tensor, dudt: Tensor, patch_length: int,
                        loss_fn: Optional[Callable[[Tensor, Tensor], Tensor]] = None) -> Tensor:
    """Mismatch at patch boundaries.

    Integrating patch p+1 one step past its start lands on the end of patch p;
    that value, anchor_{p+1} - sum(dudt over patch p+1), is compared with the
    direct estimate anchor_p. Zero when there is a single patch.
    """
    if loss_fn is None:
        from model.losses import smooth_l1
        loss_fn = smooth_l1
    total, d = u.shape[-2], u.shape[-1]
    n_patches = _check_divisible(total, patch_length)
    if n_patches < 2:
        return Tensor(0.0)
    S = patch_length
    patched = u.shape[:-2] + (n_patches, S, d)
    anchors = u.reshape(patched)[..., S - 1, :]              # [..., P, d]
    sums = dudt.reshape(patched).sum(axis=-2)                 # [..., P, d]
    extended = anchors[..., 1:, :] - sums[..., 1:, :]
    return loss_fn(extended, anchors[..., :-1, :])
