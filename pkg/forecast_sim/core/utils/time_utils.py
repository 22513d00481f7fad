"""Sampling-interval helpers for dataset ingestion and calendar features."""

import pandas as pd

from core.models.base import Frequency

FREQUENCY_STEPS = {
    pd.Timedelta(hours=1): Frequency.HOURLY,
    pd.Timedelta(minutes=15): Frequency.QUARTER_HOURLY,
    pd.Timedelta(minutes=10): Frequency.TEN_MINUTELY,
}

STEP_OF = {freq: step for step, freq in FREQUENCY_STEPS.items()}


def frequency_of(step: pd.Timedelta) -> Frequency:
    """Map a sampling interval to its frequency class."""
    if step not in FREQUENCY_STEPS:
        raise ValueError(f"unsupported sampling interval {step}")
    return FREQUENCY_STEPS[step]
