"""
Input representations of the encoder.

Three paths feed the aggregation layers:
1. The normalized time index tau, lifted by concatenated Fourier features
2. Calendar features of every timestamp in the window, scaled into [0, 1]
3. The lookback observations, one token per channel (see model.encoder)
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd

from core.autodiff.tensor import Tensor
from core.errors import IngestionError
from core.models.base import Frequency, InrActivation, TemporalFeatures, TimeIndexGrid
from core.utils.time_utils import STEP_OF
from model.layers import SirenStack, activate

HOURLY_FEATURES = ['hour_of_day', 'day_of_week', 'day_of_year', 'month_of_year']
MINUTE_DENOMINATOR = {
    Frequency.QUARTER_HOURLY: 59.0,
    Frequency.TEN_MINUTELY: 50.0,
}


def time_index_grid(lookback: int, horizon: int) -> TimeIndexGrid:
    """tau_i = i / (L + H) for i = 0 .. L+H-1."""
    return TimeIndexGrid.create(lookback, horizon)


@dataclass
class CffBank:
    """Frozen random frequencies, one (d/2 x 1) matrix per scale s with entries ~ N(0, (2^s)^2)."""
    scale_matrices: List[np.ndarray]
    frozen: bool = field(default=True)

    @classmethod
    def create(cls, half_width: int, num_scales: int, rng: np.random.Generator) -> 'CffBank':
        matrices = [rng.normal(0.0, 2.0 ** s, size=(half_width, 1)) for s in range(num_scales)]
        for matrix in matrices:
            matrix.setflags(write=False)
        return cls(scale_matrices=matrices)

    @property
    def half_width(self) -> int:
        return self.scale_matrices[0].shape[0]

    @property
    def num_scales(self) -> int:
        return len(self.scale_matrices)

    @property
    def output_dim(self) -> int:
        return 2 * self.half_width * self.num_scales


def cff_encode(grid: TimeIndexGrid, bank: CffBank,
               activation: InrActivation = InrActivation.SINE) -> Tensor:
    """Rows [sin(2 pi B_s tau), cos(2 pi B_s tau)] concatenated over scales.

    Non-sine activations replace both halves of each block with act(2 pi B_s tau).
    """
    tau = grid.values[:, None]
    blocks = []
    for matrix in bank.scale_matrices:
        phase = 2.0 * np.pi * tau @ matrix.T
        if activation is InrActivation.SINE:
            blocks.extend([np.sin(phase), np.cos(phase)])
        else:
            lifted = activate(Tensor(phase), activation).data
            blocks.extend([lifted, lifted])
    return Tensor(np.concatenate(blocks, axis=-1))


def siren_forward(inputs: Tensor, stack: SirenStack) -> Tensor:
    return stack(inputs)


def temporal_feature_names(freq: Frequency) -> List[str]:
    if freq is Frequency.HOURLY:
        return list(HOURLY_FEATURES)
    return HOURLY_FEATURES + ['minute_of_hour']


def temporal_features(timestamps, freq: Frequency) -> TemporalFeatures:
    """Calendar fields scaled to [0, 1]; day-of-week is Monday-based."""
    index = pd.DatetimeIndex(timestamps)
    if len(index) > 1:
        steps = index[1:] - index[:-1]
        bad = np.flatnonzero(steps != STEP_OF[freq])
        if bad.size:
            raise IngestionError(
                f"timestamps are not uniformly spaced at {STEP_OF[freq]} "
                f"(interval {steps[bad[0]]} before position {bad[0] + 1})")
    columns = [
        index.hour.to_numpy() / 23.0,
        index.dayofweek.to_numpy() / 6.0,
        np.minimum((index.dayofyear.to_numpy() - 1) / 365.0, 1.0),
        (index.month.to_numpy() - 1) / 11.0,
    ]
    if freq is not Frequency.HOURLY:
        columns.append(index.minute.to_numpy() / MINUTE_DENOMINATOR[freq])
    matrix = np.stack(columns, axis=-1).astype(np.float64)
    return TemporalFeatures(matrix=matrix, feature_names=temporal_feature_names(freq))
