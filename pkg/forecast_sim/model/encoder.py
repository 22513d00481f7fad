"""
Encoder: latent derivative sequence alpha over lookback and horizon.

The time-index representation queries the channel tokens of the lookback
(spatial path) through cross-attention and absorbs the calendar features
(temporal path) through a fusion map, in N stacked aggregation layers. All
L+H positions are produced in one pass.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from core.autodiff.ops import broadcast_to, concat, softmax
from core.autodiff.tensor import Tensor, as_tensor
from core.errors import DimensionError
from core.models.base import InrActivation, TimeIndexGrid
from core.models.config import ModelConfig
from core.utils.seeding import substream
from model.features import CffBank, cff_encode, siren_forward
from model.layers import LayerNorm, Linear, Module, SirenStack

logger = logging.getLogger(__name__)

# alpha: Tensor [..., L+H, d]
LatentSequence = Tensor


class AggregationBlock(Module):
    """Cross-attention onto channel tokens followed by temporal fusion."""

    def __init__(self, d: int, temporal_width: int, n_heads: int, use_spatial: bool,
                 use_temporal: bool, seed: int, tag: str):
        if d % n_heads:
            raise DimensionError("attention heads", (d,), (n_heads,))
        self.d = d
        self.n_heads = n_heads
        self.use_spatial = use_spatial
        self.use_temporal = use_temporal
        if use_spatial:
            rng = substream(seed, 'init', tag, 'attention')
            self.query = Linear(d, d, rng)
            self.key = Linear(d, d, rng)
            self.value = Linear(d, d, rng)
            self.output = Linear(d, d, rng)
            self.attn_norm = LayerNorm(d)
        fuse_in = d + temporal_width if use_temporal else d
        self.fuse = Linear(fuse_in, d, substream(seed, 'init', tag, 'fuse'))
        self.fuse_norm = LayerNorm(d)

    @property
    def head_dim(self) -> int:
        return self.d // self.n_heads


class EncoderParams(Module):
    """All trainable encoder parameters plus the frozen Fourier bank."""

    def __init__(self, config: ModelConfig, lookback: int, temporal_width: int, seed: int):
        d = config.d
        activation = config.activation
        self.config = config
        self.lookback = lookback
        self.temporal_width = temporal_width
        self.bank = CffBank.create(d // 2, config.cff_scales, substream(seed, 'cff'))

        self.tau_proj = Linear(self.bank.output_dim, d, substream(seed, 'init', 'tau_proj'))
        self.tau_norm = LayerNorm(d)
        self.tau_stack = SirenStack(d, d, config.k, InrActivation.GELU,
                                    substream(seed, 'init', 'tau_stack'))
        if config.use_temporal:
            self.t_proj = Linear(temporal_width, temporal_width, substream(seed, 'init', 't_proj'))
            self.t_norm = LayerNorm(temporal_width)
            self.t_stack = SirenStack(temporal_width, temporal_width, config.k, activation,
                                      substream(seed, 'init', 't_stack'), omega=config.siren_omega)
        if config.use_spatial:
            self.x_proj = Linear(lookback, d, substream(seed, 'init', 'x_proj'))
            self.x_norm = LayerNorm(d)
            self.x_stack = SirenStack(d, d, config.k, activation,
                                      substream(seed, 'init', 'x_stack'), omega=config.siren_omega)
        self.blocks: List[AggregationBlock] = [
            AggregationBlock(d, temporal_width, config.n_heads, config.use_spatial,
                             config.use_temporal, seed, f'block{i}')
            for i in range(config.n_layers)
        ]


def embed_inputs(grid: TimeIndexGrid, t_feats, x_his, params: EncoderParams
                 ) -> Tuple[Tensor, Optional[Tensor], Optional[Tensor]]:
    """Project and normalize the three paths.

    Returns tau0 [L+H, d], t0 [..., L+H, t] and x0 [..., C, d]; a disabled path
    returns None. Each channel's L-length history becomes one token.
    """
    tau = cff_encode(grid, params.bank, params.config.activation)
    tau0 = params.tau_norm(params.tau_proj(tau).gelu())

    t0 = None
    if params.config.use_temporal:
        t_feats = as_tensor(t_feats)
        if t_feats.shape[-2] != grid.length or t_feats.shape[-1] != params.temporal_width:
            raise DimensionError("temporal features", t_feats.shape,
                                 (grid.length, params.temporal_width))
        t0 = params.t_norm(params.t_proj(t_feats).sin())

    x0 = None
    if params.config.use_spatial:
        x_his = as_tensor(x_his)
        if x_his.shape[-2] != params.lookback:
            raise DimensionError("lookback", x_his.shape, (params.lookback, x_his.shape[-1]))
        x0 = params.x_norm(params.x_proj(x_his.swapaxes(-1, -2)).gelu())
    return tau0, t0, x0


def cross_attention(tau: Tensor, x0: Tensor, block: AggregationBlock,
                    return_weights: bool = False):
    """Norm(tau + Attn(tau, x0)) with queries from tau, keys/values from channel tokens."""
    h, dh = block.n_heads, block.head_dim

    def heads(t: Tensor) -> Tensor:
        return t.reshape(t.shape[:-1] + (h, dh)).swapaxes(-2, -3)

    q = heads(block.query(tau))                 # [..., h, P, dh]
    k = heads(block.key(x0))                    # [..., h, C, dh]
    v = heads(block.value(x0))
    weights = softmax(q @ k.swapaxes(-1, -2) / np.sqrt(dh))
    mixed = (weights @ v).swapaxes(-2, -3)      # [..., P, h, dh]
    mixed = mixed.reshape(mixed.shape[:-2] + (block.d,))
    out = block.attn_norm(tau + block.output(mixed))
    return (out, weights) if return_weights else out


def aggregate_layer(tau: Tensor, t0: Optional[Tensor], x0: Optional[Tensor],
                    block: AggregationBlock) -> Tensor:
    if block.use_spatial:
        tau = cross_attention(tau, x0, block)
    fused = concat([tau, t0], axis=-1) if block.use_temporal else tau
    if fused.shape[-1] != block.fuse.in_features:
        raise DimensionError("fusion", fused.shape, block.fuse.weight.shape)
    return block.fuse_norm(tau + block.fuse(fused))


def encode(x_his, t_feats, grid: TimeIndexGrid, params: EncoderParams) -> LatentSequence:
    """alpha over all L+H positions; depends only on x_his, t_feats and tau."""
    tau0, t0, x0 = embed_inputs(grid, t_feats, x_his, params)
    tau = siren_forward(tau0, params.tau_stack)
    t = siren_forward(t0, params.t_stack) if t0 is not None else None
    x = siren_forward(x0, params.x_stack) if x0 is not None else None

    batch_shape = tuple(np.shape(x_his.data if isinstance(x_his, Tensor) else x_his)[:-2])
    if batch_shape:
        tau = broadcast_to(tau, batch_shape + tau.shape)
    for block in params.blocks:
        tau = aggregate_layer(tau, t, x, block)
    return tau
