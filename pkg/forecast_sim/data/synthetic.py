"""
Synthetic multichannel series in the ETT CSV layout.
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from core.utils.seeding import substream

logger = logging.getLogger(__name__)


class SinusoidSimulator:
    """Daily plus weekly sinusoid with Gaussian noise, one phase shift per channel.

        x_t = sin(2 pi t / 24 + phi_c) + 0.1 sin(2 pi t / 168 + phi_c) + N(0, noise_std^2)
    """

    def __init__(self, channels: int = 3, noise_std: float = 0.01,
                 daily_period: float = 24.0, weekly_period: float = 168.0,
                 weekly_amplitude: float = 0.1):
        self.channels = channels
        self.noise_std = noise_std
        self.daily_period = daily_period
        self.weekly_period = weekly_period
        self.weekly_amplitude = weekly_amplitude

    def phases(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.channels) / self.channels

    def generate(self, length: int, seed: int = 2024) -> np.ndarray:
        t = np.arange(length, dtype=np.float64)[:, None]
        phi = self.phases()[None, :]
        clean = (np.sin(2.0 * np.pi * t / self.daily_period + phi)
                 + self.weekly_amplitude * np.sin(2.0 * np.pi * t / self.weekly_period + phi))
        noise = substream(seed, 'data').normal(0.0, self.noise_std, size=clean.shape)
        return clean + noise


def generate_sinusoid(length: int = 4000, channels: int = 3, noise_std: float = 0.01,
                      seed: int = 2024, start: str = '2016-07-01 00:00:00',
                      freq: pd.Timedelta = pd.Timedelta(hours=1)) -> pd.DataFrame:
    values = SinusoidSimulator(channels=channels, noise_std=noise_std).generate(length, seed)
    frame = pd.DataFrame(values, columns=[f'ch{i}' for i in range(channels)])
    frame.insert(0, 'date', pd.date_range(start=start, periods=length, freq=freq))
    return frame


def generate_constant(length: int, value, start: str = '2016-07-01 00:00:00',
                      freq: pd.Timedelta = pd.Timedelta(hours=1)) -> pd.DataFrame:
    value = np.atleast_1d(np.asarray(value, dtype=np.float64))
    frame = pd.DataFrame(np.tile(value, (length, 1)),
                         columns=[f'ch{i}' for i in range(value.size)])
    frame.insert(0, 'date', pd.date_range(start=start, periods=length, freq=freq))
    return frame


def write_ett_csv(frame: pd.DataFrame, path: str, float_format: Optional[str] = '%.10f') -> str:
    frame.to_csv(path, index=False, date_format='%Y-%m-%d %H:%M:%S', float_format=float_format)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path
