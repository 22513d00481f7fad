"""
Initial-value-problem forecaster.

One forward pass per window (or batch of windows):

1. encode the lookback relative to its last row into alpha over L+H positions
2. integrate alpha with the patched solver into z
3. fit the ridge decoder on the first L rows of z against X - x_init
4. decode every row and add x_init; the last H rows are the forecast

Training differentiates the horizon loss through step 3; prediction only
refits the decoder.
"""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Optional, Tuple, Union

import numpy as np

from core.autodiff.tensor import Tensor, no_grad
from core.errors import DimensionError
from core.models.base import ForecastWindow, LossReport, TimeIndexGrid, WindowBatch
from core.models.config import ModelConfig
from model.decoder import RidgeSolution, decode, ridge_fit
from model.encoder import EncoderParams, encode
from model.layers import Module
from model.losses import (first_difference_loss, prediction_loss, smooth_l1, total_objective,
                          with_anchor)
from model.solver import IntegralSequence, SolverParams, continuity_residual, solve

logger = logging.getLogger(__name__)

Windows = Union[ForecastWindow, WindowBatch]


@dataclass
class ForwardResult:
    predictions: Tensor                 # [..., H, C]
    decoded: Tensor                     # [..., L+H, C]
    z: Tensor                           # [..., L+H, d]
    solution: RidgeSolution
    x_init: np.ndarray                  # [..., C], zeros without the initial condition
    last_observed: np.ndarray           # [..., C], X[L-1]
    sequence: Optional[IntegralSequence] = None

    @property
    def deltas(self) -> Tensor:
        x_init = self.x_init
        return self.predictions - x_init.reshape(x_init.shape[:-1] + (1, x_init.shape[-1]))


class IVPForecaster(Module):
    def __init__(self, config: ModelConfig, lookback: int, horizon: int,
                 temporal_width: int, seed: int = 2024):
        config.validate()
        self.config = config
        self.grid = TimeIndexGrid.create(lookback, horizon)
        self.encoder = EncoderParams(config, lookback, temporal_width, seed)
        self.solver = SolverParams(config.d, config.patch_length, seed) if config.use_solver else None
        self.logger = logging.getLogger(__name__)

    @property
    def lookback(self) -> int:
        return self.grid.lookback

    @property
    def horizon(self) -> int:
        return self.grid.horizon

    def initial_condition(self, windows: Windows) -> np.ndarray:
        if self.config.use_initial:
            return np.asarray(windows.x_init, dtype=np.float64)
        return np.zeros_like(windows.x_init, dtype=np.float64)

    def forward(self, windows: Windows) -> ForwardResult:
        X = np.asarray(windows.X, dtype=np.float64)
        if X.shape[-2] != self.lookback or windows.grid.length != self.grid.length:
            raise DimensionError("forecaster window", X.shape, (self.lookback, X.shape[-1]))
        x_init = self.initial_condition(windows)
        relative = X - x_init[..., None, :]

        alpha = encode(relative, windows.temporal, self.grid, self.encoder)
        sequence = None
        z = alpha
        if self.solver is not None:
            sequence = solve(alpha, self.solver)
            z = sequence.z

        solution = ridge_fit(z[..., :self.lookback, :], relative, self.config.ridge_lambda)
        decoded = decode(z, solution, x_init)
        return ForwardResult(
            predictions=decoded[..., self.lookback:, :],
            decoded=decoded,
            z=z,
            solution=solution,
            x_init=x_init,
            last_observed=X[..., -1, :],
            sequence=sequence,
        )

    __call__ = forward

    def objective(self, result: ForwardResult, Y) -> Tuple[Tensor, LossReport]:
        """L_p + L_c + L_f for one forward result against the horizon targets."""
        beta = self.config.smooth_l1_beta
        Y = np.asarray(Y, dtype=np.float64)
        l_p = prediction_loss(result.deltas, Y, result.x_init, beta)
        l_f = first_difference_loss(with_anchor(result.predictions, result.last_observed),
                                    with_anchor(Y, result.last_observed), beta)
        l_c = None
        if result.sequence is not None and self.config.use_continuity:
            l_c = continuity_residual(result.sequence.u, result.sequence.dudt,
                                      self.config.patch_length, partial(smooth_l1, beta=beta))
        return total_objective(l_p, l_f, l_c)

    def adapt_and_predict(self, window: Windows
                          ) -> Tuple[np.ndarray, Tensor, RidgeSolution]:
        """Test-time path: only the decoder is refit, no graph is recorded."""
        with no_grad():
            result = self.forward(window)
        return result.predictions.data, result.z, result.solution

    def predict(self, windows: Windows) -> np.ndarray:
        return self.adapt_and_predict(windows)[0]
