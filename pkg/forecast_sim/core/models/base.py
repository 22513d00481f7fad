"""
Base models for forecasting entities.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from core.errors import ConfigError, ContractError


class Frequency(Enum):
    HOURLY = "hourly"
    QUARTER_HOURLY = "quarter_hourly"
    TEN_MINUTELY = "ten_minutely"


class InrActivation(Enum):
    SINE = "sine"
    GELU = "gelu"
    TANH = "tanh"


@dataclass
class TimeIndexGrid:
    """Normalized time index tau_i = i / (L + H) over lookback and horizon."""
    values: np.ndarray
    lookback: int
    horizon: int

    @classmethod
    def create(cls, lookback: int, horizon: int) -> 'TimeIndexGrid':
        if lookback < 1 or horizon < 1:
            raise ContractError(f"lookback and horizon must be positive, got L={lookback}, H={horizon}")
        total = lookback + horizon
        return cls(values=np.arange(total, dtype=np.float64) / total,
                   lookback=lookback, horizon=horizon)

    @property
    def length(self) -> int:
        return self.lookback + self.horizon


@dataclass
class TemporalFeatures:
    """Calendar features scaled into [0, 1], one row per timestamp."""
    matrix: np.ndarray
    feature_names: List[str]

    @property
    def width(self) -> int:
        return len(self.feature_names)


@dataclass
class SplitSpec:
    """Chronological train/validation/test ratios."""
    ratios: Tuple[float, float, float]

    @classmethod
    def create(cls, ratios) -> 'SplitSpec':
        ratios = tuple(float(r) for r in ratios)
        if len(ratios) != 3 or any(r < 0 for r in ratios):
            raise ConfigError(f"split needs three nonnegative ratios, got {ratios}")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")
        return cls(ratios=ratios)

    @classmethod
    def ett(cls) -> 'SplitSpec':
        return cls.create((0.6, 0.2, 0.2))

    @classmethod
    def standard(cls) -> 'SplitSpec':
        return cls.create((0.7, 0.1, 0.2))


@dataclass
class ChannelStats:
    """Per-channel train-split moments used for (de)standardization."""
    mean: np.ndarray
    std: np.ndarray


@dataclass
class ForecastWindow:
    """One lookback/horizon pair with aligned features."""
    X: np.ndarray            # [L, C]
    Y: np.ndarray            # [H, C]
    x_init: np.ndarray       # [C], equals X[L-1]
    temporal: np.ndarray     # [L+H, t]
    grid: TimeIndexGrid
    offset: int = 0
    timestamps: Optional[pd.DatetimeIndex] = None

    @property
    def lookback(self) -> int:
        return self.X.shape[0]

    @property
    def horizon(self) -> int:
        return self.Y.shape[0]


@dataclass
class WindowBatch:
    """Windows stacked along a leading batch axis."""
    X: np.ndarray            # [B, L, C]
    Y: np.ndarray            # [B, H, C]
    x_init: np.ndarray       # [B, C]
    temporal: np.ndarray     # [B, L+H, t]
    grid: TimeIndexGrid
    offsets: List[int] = field(default_factory=list)

    @classmethod
    def stack(cls, windows: List[ForecastWindow]) -> 'WindowBatch':
        if not windows:
            raise ContractError("cannot stack an empty list of windows")
        return cls(
            X=np.stack([w.X for w in windows]),
            Y=np.stack([w.Y for w in windows]),
            x_init=np.stack([w.x_init for w in windows]),
            temporal=np.stack([w.temporal for w in windows]),
            grid=windows[0].grid,
            offsets=[w.offset for w in windows],
        )

    @property
    def size(self) -> int:
        return self.X.shape[0]


@dataclass
class LossReport:
    """Scalar loss components of one batch."""
    l_p: float
    l_f: float
    l_c: float
    total: float

    @classmethod
    def create(cls, l_p: float, l_f: float, l_c: float) -> 'LossReport':
        return cls(l_p=l_p, l_f=l_f, l_c=l_c, total=l_p + l_c + l_f)

    def as_dict(self) -> dict:
        return {'l_p': self.l_p, 'l_f': self.l_f, 'l_c': self.l_c, 'total': self.total}
