"""
Experiment Scenario

Runs one named model variant across every configured horizon and seed:
1. Resolves a TrainConfig per (horizon, seed) with the variant's model flags
2. Trains (optionally searching the lookback multiplier) and saves a checkpoint
3. Evaluates the checkpoint on the test split and records a report row
"""

import logging
import os
import time
from typing import Dict, Optional

from core.models.config import ExperimentConfig
from simulation.engine.checkpoint import save_checkpoint
from simulation.engine.trainer import PreparedData, evaluate, train
from simulation.report import ReportRow, ReportTable

logger = logging.getLogger(__name__)


class ExperimentRunner:
    def __init__(self, experiment: ExperimentConfig, data: Optional[PreparedData] = None,
                 out_dir: Optional[str] = None):
        self.experiment = experiment
        self.data = data if data is not None else PreparedData.load(experiment.train)
        self.out_dir = out_dir
        self.logger = logging.getLogger(__name__)

    @property
    def dataset_name(self) -> str:
        return self.data.dataset.name or os.path.basename(self.experiment.train.dataset)

    def _elapsed(self, start: float) -> float:
        return time.perf_counter() - start if self.experiment.report_runtime else 0.0

    def checkpoint_path(self, variant: str, horizon: int, seed: int) -> str:
        safe = variant.replace('+', 'plus_').replace('-', 'minus_').strip('_') or 'variant'
        return os.path.join(self.out_dir, f"checkpoint_{safe}_H{horizon}_seed{seed}.json")

    def run_variant(self, variant: str, overrides: Optional[Dict[str, object]] = None) -> ReportTable:
        overrides = overrides or {}
        table = ReportTable()
        for horizon in self.experiment.horizons:
            for seed in self.experiment.run_seeds():
                config = self.experiment.for_run(horizon, seed, **overrides)
                self.logger.info(f"Variant {variant}: H={horizon} seed={seed} {overrides or ''}")
                start = time.perf_counter()
                checkpoint = train(config, self.data)
                checkpoint.variant = variant
                mse, mae = evaluate(checkpoint, 'test', data=self.data)
                runtime = self._elapsed(start)
                if self.out_dir is not None:
                    save_checkpoint(checkpoint, self.checkpoint_path(variant, horizon, seed))
                self.logger.info(f"Variant {variant}: H={horizon} seed={seed} "
                                 f"MSE={mse:.6g} MAE={mae:.6g}")
                table.add(ReportRow(dataset=self.dataset_name, horizon=horizon, variant=variant,
                                    mse=mse, mae=mae, runtime_s=runtime, seed=seed))
        return table
