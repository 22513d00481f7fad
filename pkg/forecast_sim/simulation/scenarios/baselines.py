"""
Baseline Scenario

Zero-skill and linear comparators evaluated on the same test windows as the
forecaster:
1. persistence  every horizon step repeats x_init
2. linear       per-channel ridge regression from the lookback to the horizon
"""

import logging
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
from sklearn.linear_model import Ridge

from core.errors import ConfigError
from core.models.base import ForecastWindow
from core.models.config import ExperimentConfig
from data.dataset import destandardize
from simulation.engine.trainer import PreparedData, forecast_errors
from simulation.report import ReportRow, ReportTable

logger = logging.getLogger(__name__)


def persistence_forecast(x_init: np.ndarray, horizon: int) -> np.ndarray:
    """[..., C] -> [..., H, C]"""
    x_init = np.asarray(x_init, dtype=np.float64)
    return np.repeat(x_init[..., None, :], horizon, axis=-2)


class LinearLookbackBaseline:
    """One multi-output ridge per channel mapping the L lookback values to H horizon values."""

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha
        self.models: Dict[int, Ridge] = {}

    def fit(self, windows: List[ForecastWindow]) -> 'LinearLookbackBaseline':
        if not windows:
            raise ConfigError("linear baseline needs at least one training window")
        X = np.stack([w.X for w in windows])
        Y = np.stack([w.Y for w in windows])
        for channel in range(X.shape[-1]):
            self.models[channel] = Ridge(alpha=self.alpha).fit(X[:, :, channel], Y[:, :, channel])
        return self

    def predict(self, windows: List[ForecastWindow]) -> np.ndarray:
        X = np.stack([w.X for w in windows])
        columns = [self.models[c].predict(X[:, :, c]) for c in range(X.shape[-1])]
        return np.stack(columns, axis=-1)


def _errors(predictions: np.ndarray, targets: np.ndarray, stats) -> Tuple[float, float]:
    if stats is not None:
        predictions, targets = destandardize(predictions, stats), destandardize(targets, stats)
    return forecast_errors(predictions, targets)


def baseline(experiment: ExperimentConfig, data: Optional[PreparedData] = None) -> ReportTable:
    data = data if data is not None else PreparedData.load(experiment.train)
    stats = data.dataset.train_stats if experiment.train.raw_metrics else None
    name = data.dataset.name
    table = ReportTable()
    for horizon in experiment.horizons:
        config = experiment.for_run(horizon)
        test = data.windows('test', config.lookback, horizon, config.stride)
        targets = np.stack([w.Y for w in test])

        start = time.perf_counter()
        mse, mae = _errors(persistence_forecast(np.stack([w.x_init for w in test]), horizon),
                           targets, stats)
        runtime = time.perf_counter() - start if experiment.report_runtime else 0.0
        table.add(ReportRow(name, horizon, 'persistence', mse, mae, runtime, config.seed))
        logger.info(f"Persistence H={horizon}: MSE={mse:.6g} MAE={mae:.6g}")

        start = time.perf_counter()
        train_windows = data.windows('train', config.lookback, horizon, config.stride)
        linear = LinearLookbackBaseline().fit(train_windows)
        mse, mae = _errors(linear.predict(test), targets, stats)
        runtime = time.perf_counter() - start if experiment.report_runtime else 0.0
        table.add(ReportRow(name, horizon, 'linear', mse, mae, runtime, config.seed))
        logger.info(f"Linear ridge H={horizon}: MSE={mse:.6g} MAE={mae:.6g}")
    return table
