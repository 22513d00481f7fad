"""
ETT-layout CSV ingestion, chronological splits, standardization and
lookback/horizon windows.
"""

import logging
import math
import os
import re
from dataclasses import dataclass, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.errors import ConfigError, IngestionError
from core.models.base import (ChannelStats, ForecastWindow, Frequency, SplitSpec, TimeIndexGrid,
                              WindowBatch)
from core.utils.time_utils import frequency_of
from model.features import temporal_features

logger = logging.getLogger(__name__)

DATE_COLUMN = 'date'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
# header is line 1, first data row is line 2
FIRST_DATA_LINE = 2


@dataclass
class TimeSeriesDataset:
    timestamps: pd.DatetimeIndex
    values: np.ndarray               # [T, C]
    channel_names: List[str]
    freq: Frequency
    train_stats: Optional[ChannelStats] = None
    name: str = ""

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


def _first_bad(mask) -> int:
    return int(np.flatnonzero(np.asarray(mask))[0])


def load_csv(path: str) -> TimeSeriesDataset:
    """Parse a CSV whose first column is 'date' and whose other columns are numeric."""
    if not os.path.isfile(path):
        raise IngestionError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.ParserError as exc:
        match = re.search(r'line (\d+)', str(exc))
        raise IngestionError(f"ragged row in {path}: {exc}",
                             int(match.group(1)) if match else None) from None
    except (pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None

    if frame.columns.empty or frame.columns[0] != DATE_COLUMN:
        raise IngestionError(f"first column must be named {DATE_COLUMN!r}", 1)
    if frame.shape[1] < 2:
        raise IngestionError("no value columns after the date column", 1)
    if len(frame) < 2:
        raise IngestionError(f"need at least two rows to infer the frequency, got {len(frame)}")

    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        row = _first_bad(short)
        raise IngestionError("ragged row (missing fields)", row + FIRST_DATA_LINE)

    timestamps = pd.to_datetime(frame[DATE_COLUMN], format=DATE_FORMAT, errors='coerce')
    if timestamps.isna().any():
        row = _first_bad(timestamps.isna())
        raise IngestionError(f"unparsable date {frame[DATE_COLUMN].iloc[row]!r}",
                             row + FIRST_DATA_LINE)

    channel_names = list(frame.columns[1:])
    numeric = frame[channel_names].apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = _first_bad(bad)
        raise IngestionError(f"non-numeric value in row {frame.iloc[row].tolist()}",
                             row + FIRST_DATA_LINE)

    index = pd.DatetimeIndex(timestamps)
    step = index[1] - index[0]
    try:
        freq = frequency_of(step)
    except ValueError as exc:
        raise IngestionError(str(exc), FIRST_DATA_LINE + 1) from None
    gaps = (index[1:] - index[:-1]) != step
    if gaps.any():
        row = _first_bad(gaps) + 1
        raise IngestionError(
            f"non-uniform spacing: {index[row - 1]} -> {index[row]} (expected step {step})",
            row + FIRST_DATA_LINE)

    values = numeric.to_numpy(dtype=np.float64)
    logger.info(f"Loaded {path}: T={values.shape[0]}, C={values.shape[1]}, freq={freq.value}")
    return TimeSeriesDataset(timestamps=index, values=values, channel_names=channel_names,
                             freq=freq, name=os.path.splitext(os.path.basename(path))[0])


def chronological_split(ds, spec: SplitSpec) -> Tuple[range, range, range]:
    """Contiguous train/val/test ranges; floor for the first two, remainder to test."""
    total = ds if isinstance(ds, int) else ds.length
    r_train, r_val, _ = spec.ratios
    # tolerance keeps e.g. 17420 * 0.6 at 10452
    n_train = math.floor(total * r_train + 1e-9)
    n_val = math.floor(total * r_val + 1e-9)
    return (range(0, n_train),
            range(n_train, n_train + n_val),
            range(n_train + n_val, total))


def standardize(ds: TimeSeriesDataset, train_range: range) -> TimeSeriesDataset:
    """Per-channel z-score with moments of the train range only."""
    if len(train_range) == 0:
        raise ConfigError("train split is empty; cannot compute standardization statistics")
    train = ds.values[train_range.start:train_range.stop]
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    degenerate = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    if degenerate.any():
        names = [ds.channel_names[i] for i in np.flatnonzero(degenerate)]
        logger.warning(f"Zero-variance channels {names}: std clamped to 1.0")
        std = np.where(degenerate, 1.0, std)
    stats = ChannelStats(mean=mean, std=std)
    return replace(ds, values=(ds.values - mean) / std, train_stats=stats)


def destandardize(values: np.ndarray, stats: ChannelStats) -> np.ndarray:
    return np.asarray(values) * stats.std + stats.mean


def iter_windows(ds: TimeSeriesDataset, span: range, lookback: int, horizon: int,
                 stride: int = 1) -> Iterator[ForecastWindow]:
    """Sliding windows over span; features are aligned row-for-row with the values."""
    length = lookback + horizon
    if len(span) < length:
        raise ConfigError(f"split [{span.start}, {span.stop}) has {len(span)} rows; "
                          f"windows need at least L+H={length}")
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    grid = TimeIndexGrid.create(lookback, horizon)
    stamps = ds.timestamps[span.start:span.stop]
    calendar = temporal_features(stamps, ds.freq).matrix
    values = ds.values[span.start:span.stop]
    for start in range(0, len(span) - length + 1, stride):
        X = values[start:start + lookback]
        yield ForecastWindow(
            X=X,
            Y=values[start + lookback:start + length],
            x_init=X[-1],
            temporal=calendar[start:start + length],
            grid=grid,
            offset=span.start + start,
            timestamps=stamps[start:start + length],
        )


def make_windows(ds: TimeSeriesDataset, span: range, lookback: int, horizon: int,
                 stride: int = 1) -> List[ForecastWindow]:
    return list(iter_windows(ds, span, lookback, horizon, stride))


def stack_windows(windows: List[ForecastWindow]) -> WindowBatch:
    return WindowBatch.stack(windows)


def window_count(span_length: int, lookback: int, horizon: int, stride: int = 1) -> int:
    return max(0, (span_length - lookback - horizon) // stride + 1)
