"""
Training engine

This module provides the training loop that:
1. Loads, splits and standardizes the dataset
2. Iterates shuffled train windows in batches and updates the encoder and solver
3. Tracks validation L_p per epoch with early stopping on the best checkpoint
4. Evaluates a checkpoint on a split as (MSE, MAE)
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.autodiff.tensor import no_grad
from core.errors import ConfigError, NumericError
from core.models.base import ForecastWindow, SplitSpec, WindowBatch
from core.models.config import MU_GRID, TrainConfig
from core.utils.seeding import substream
from data.dataset import (TimeSeriesDataset, chronological_split, destandardize, load_csv,
                          make_windows, standardize, stack_windows)
from model.features import temporal_feature_names
from model.forecaster import IVPForecaster
from simulation.engine.checkpoint import Checkpoint, TrainingHistory
from simulation.engine.optim import Adam, clip_grad_norm

logger = logging.getLogger(__name__)

SPLITS = ('train', 'val', 'test')


@dataclass
class PreparedData:
    """Standardized dataset with its chronological ranges."""
    dataset: TimeSeriesDataset
    ranges: Dict[str, range]

    @classmethod
    def create(cls, dataset: TimeSeriesDataset, split: Tuple[float, ...]) -> 'PreparedData':
        ranges = dict(zip(SPLITS, chronological_split(dataset, SplitSpec.create(split))))
        return cls(dataset=standardize(dataset, ranges['train']), ranges=ranges)

    @classmethod
    def load(cls, config: TrainConfig) -> 'PreparedData':
        if not config.dataset:
            raise ConfigError("no dataset path configured")
        return cls.create(load_csv(config.dataset), config.split)

    @property
    def temporal_width(self) -> int:
        return len(temporal_feature_names(self.dataset.freq))

    def windows(self, split: str, lookback: int, horizon: int, stride: int = 1) -> List[ForecastWindow]:
        if split not in self.ranges:
            raise ConfigError(f"unknown split {split!r}; expected one of {SPLITS}")
        span = self.ranges[split]
        if len(span) == 0:
            raise ConfigError(f"{split} split is empty")
        return make_windows(self.dataset, span, lookback, horizon, stride)


def batches(windows: List[ForecastWindow], batch_size: int,
            order: Optional[np.ndarray] = None) -> List[WindowBatch]:
    order = np.arange(len(windows)) if order is None else order
    return [stack_windows([windows[i] for i in order[start:start + batch_size]])
            for start in range(0, len(order), batch_size)]


def forecast_errors(predictions: np.ndarray, targets: np.ndarray) -> Tuple[float, float]:
    """(MSE, MAE) over every horizon entry."""
    error = np.asarray(predictions, dtype=np.float64) - np.asarray(targets, dtype=np.float64)
    return float(np.mean(error ** 2)), float(np.mean(np.abs(error)))


def build_model(config: TrainConfig, temporal_width: int) -> IVPForecaster:
    return IVPForecaster(config.model, config.lookback, config.horizon, temporal_width, config.seed)


def restore_model(checkpoint: Checkpoint) -> IVPForecaster:
    model = build_model(checkpoint.config, checkpoint.temporal_width)
    model.load_state(checkpoint.params)
    return model


class Trainer:
    def __init__(self, config: TrainConfig, data: Optional[PreparedData] = None):
        config.validate()
        self.config = config
        self.data = data if data is not None else PreparedData.load(config)
        self.model = build_model(config, self.data.temporal_width)
        self.optimizer = Adam(self.model.parameters(), lr=config.lr)
        self.history = TrainingHistory()

        # Setup logging
        self.logger = logging.getLogger(__name__)

    def _windows(self, split: str) -> List[ForecastWindow]:
        c = self.config
        return self.data.windows(split, c.lookback, c.horizon, c.stride)

    def _numeric_failure(self, where: str, error: NumericError) -> NumericError:
        self.logger.error(f"Non-finite values at {where}: {error}")
        return NumericError(f"{error} at {where}")

    def validation_loss(self, windows: List[ForecastWindow], stage: str = 'validation') -> float:
        """Window-weighted mean L_p, no graph recorded."""
        total = 0.0
        with no_grad():
            for index, batch in enumerate(batches(windows, self.config.batch_size)):
                try:
                    _, report = self.model.objective(self.model.forward(batch), batch.Y)
                except NumericError as error:
                    raise self._numeric_failure(f"{stage}, batch {index}", error) from error
                if not math.isfinite(report.l_p):
                    raise self._numeric_failure(f"{stage}, batch {index}",
                                                NumericError(f"non-finite L_p {report.l_p}"))
                total += report.l_p * batch.size
        return total / len(windows)

    def train_step(self, batch: WindowBatch, epoch: int, index: int) -> float:
        self.optimizer.zero_grad()
        try:
            result = self.model.forward(batch)
            loss, report = self.model.objective(result, batch.Y)
        except NumericError as error:
            raise self._numeric_failure(f"epoch {epoch}, batch {index}", error) from error
        if not math.isfinite(report.total):
            self.logger.error(f"Non-finite loss at epoch {epoch} batch {index}: {report.as_dict()}")
            raise NumericError(f"non-finite loss at epoch {epoch}, batch {index}: {report.as_dict()}")
        self.logger.debug(f"epoch {epoch} batch {index} l_p={report.l_p:.6g} "
                          f"l_c={report.l_c:.6g} l_f={report.l_f:.6g} total={report.total:.6g}")
        loss.backward()
        norm, clipped = clip_grad_norm(self.optimizer.params, self.config.clip_norm)
        if clipped:
            self.logger.warning(f"Gradient norm {norm:.4g} clipped to {self.config.clip_norm} "
                                f"(epoch {epoch}, batch {index})")
        self.optimizer.step()
        return report.total

    def train(self) -> Checkpoint:
        c = self.config
        self.logger.info(f"Training L={c.lookback} H={c.horizon} seed={c.seed} "
                         f"for up to {c.epochs} epochs")
        best_state = self.model.state()
        if c.epochs > 0:
            train_windows = self._windows('train')
            val_windows = self._windows('val')
            shuffle = substream(c.seed, 'shuffle')
            self.history.initial_val_lp = self.validation_loss(val_windows, 'initial validation')
            best = self.history.initial_val_lp
            stale = 0
            self.logger.info(f"Initial validation L_p {best:.6g}")

            for epoch in range(c.epochs):
                order = shuffle.permutation(len(train_windows))
                losses = [self.train_step(batch, epoch, i)
                          for i, batch in enumerate(batches(train_windows, c.batch_size, order))]
                val_lp = self.validation_loss(val_windows, f'validation after epoch {epoch}')
                self.history.train_total.append(float(np.mean(losses)))
                self.history.val_lp.append(val_lp)
                self.logger.info(f"Epoch {epoch}: train total {self.history.train_total[-1]:.6g}, "
                                 f"validation L_p {val_lp:.6g}")
                if val_lp < best:
                    best, stale = val_lp, 0
                    best_state = self.model.state()
                    self.history.best_epoch = epoch
                    self.logger.info(f"New best validation L_p {best:.6g} at epoch {epoch}")
                else:
                    stale += 1
                    if stale >= c.patience:
                        self.logger.info(f"Early stopping after epoch {epoch} (patience {c.patience})")
                        break

        self.model.load_state(best_state)
        self.logger.info("Training completed")
        return Checkpoint(
            config=c,
            params=best_state,
            lookback=c.lookback,
            horizon=c.horizon,
            temporal_width=self.data.temporal_width,
            channels=self.data.dataset.n_channels,
            history=self.history,
        )


def train(config: TrainConfig, data: Optional[PreparedData] = None) -> Checkpoint:
    if config.mu_search:
        return search_mu(config, data)[1]
    return Trainer(config, data).train()


def search_mu(config: TrainConfig, data: Optional[PreparedData] = None
              ) -> Tuple[int, Checkpoint]:
    """Train each admissible lookback multiplier and keep the best validation L_p."""
    data = data if data is not None else PreparedData.load(config)
    best: Optional[Tuple[int, Checkpoint]] = None
    shortest = min(len(data.ranges['train']), len(data.ranges['val']))
    for mu in MU_GRID:
        candidate = replace(config, mu=mu, mu_search=False)
        if candidate.model.use_solver and candidate.window_length % candidate.model.patch_length:
            logger.warning(f"Skipping mu={mu}: L+H={candidate.window_length} not divisible "
                           f"by S={candidate.model.patch_length}")
            continue
        if candidate.window_length > shortest:
            logger.warning(f"Skipping mu={mu}: L+H={candidate.window_length} exceeds the "
                           f"shortest split ({shortest} rows)")
            continue
        checkpoint = Trainer(candidate, data).train()
        score = checkpoint.history.best_val_lp
        logger.info(f"mu={mu}: best validation L_p {score:.6g}")
        if best is None or score < best[1].history.best_val_lp:
            best = (mu, checkpoint)
    if best is None:
        raise ConfigError(f"no lookback multiplier in {MU_GRID} fits the data and patch length")
    logger.info(f"Selected mu={best[0]}")
    return best


def evaluate_model(model: IVPForecaster, windows: List[ForecastWindow], batch_size: int = 32,
                   stats=None) -> Tuple[float, float]:
    if not windows:
        raise ConfigError("cannot evaluate on an empty split")
    predictions, targets = [], []
    for batch in batches(windows, batch_size):
        predictions.append(model.predict(batch))
        targets.append(batch.Y)
    predictions, targets = np.concatenate(predictions), np.concatenate(targets)
    if stats is not None:
        predictions, targets = destandardize(predictions, stats), destandardize(targets, stats)
    return forecast_errors(predictions, targets)


def evaluate(checkpoint: Checkpoint, split: str = 'test', horizon: Optional[int] = None,
             data: Optional[PreparedData] = None) -> Tuple[float, float]:
    """(MSE, MAE) of a checkpoint over every window of a split."""
    c = checkpoint.config
    if horizon is not None and horizon != checkpoint.horizon:
        raise ConfigError(f"checkpoint was trained for H={checkpoint.horizon}, not H={horizon}")
    data = data if data is not None else PreparedData.load(c)
    windows = data.windows(split, c.lookback, c.horizon, c.stride)
    stats = data.dataset.train_stats if c.raw_metrics else None
    return evaluate_model(restore_model(checkpoint), windows, c.batch_size, stats)
