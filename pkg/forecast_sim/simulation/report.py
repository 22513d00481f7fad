"""
Metric tables written to metrics.csv and ablation_deltas.csv.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List

import pandas as pd

from core.errors import NumericError

COLUMNS = ['dataset', 'horizon', 'variant', 'mse', 'mae', 'runtime_s', 'seed']


@dataclass
class ReportRow:
    dataset: str
    horizon: int
    variant: str
    mse: float
    mae: float
    runtime_s: float
    seed: int

    def __post_init__(self):
        for name in ('mse', 'mae', 'runtime_s'):
            if not math.isfinite(getattr(self, name)):
                raise NumericError(f"{name} is not finite for variant {self.variant} H={self.horizon}")


@dataclass
class ReportTable:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, row: ReportRow) -> None:
        key = (row.variant, row.horizon, row.seed)
        if any((r.variant, r.horizon, r.seed) == key for r in self.rows):
            raise ValueError(f"duplicate report row for variant={row.variant} H={row.horizon} seed={row.seed}")
        self.rows.append(row)

    def extend(self, other: 'ReportTable') -> None:
        for row in other.rows:
            self.add(row)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=COLUMNS)

    def write_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False)
        return path

    def lookup(self, variant: str, horizon: int, seed: int) -> ReportRow:
        for row in self.rows:
            if (row.variant, row.horizon, row.seed) == (variant, horizon, seed):
                return row
        raise KeyError((variant, horizon, seed))

    def deltas(self, reference: str) -> pd.DataFrame:
        """MSE/MAE of every variant minus the reference variant at the same horizon and seed."""
        frame = self.to_frame()
        base = frame[frame['variant'] == reference][['horizon', 'seed', 'mse', 'mae']]
        merged = frame.merge(base, on=['horizon', 'seed'], suffixes=('', '_ref'))
        merged['delta_mse'] = merged['mse'] - merged['mse_ref']
        merged['delta_mae'] = merged['mae'] - merged['mae_ref']
        return merged[['dataset', 'horizon', 'seed', 'variant', 'mse', 'mae',
                       'delta_mse', 'delta_mae']]
