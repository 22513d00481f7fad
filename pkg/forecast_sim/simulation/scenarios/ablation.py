"""
Ablation Scenario

Trains model variants with one component removed at a time, all sharing the
run seed, and reports each variant's test errors and their deltas against
the reference variant (the first of each suite).

Suites:
1. components  full, -Temporal, -Spatial, -Initial, -Temporal-Spatial, -All
2. robustness  full, inrs, inrs+initial, inrs+solver, full-lc
3. activation  sine, gelu, tanh
"""

import logging
from typing import Dict, Optional, Tuple

import pandas as pd

from core.errors import ConfigError
from core.models.config import ExperimentConfig
from simulation.engine.trainer import PreparedData
from simulation.report import ReportTable
from simulation.scenarios.experiment import ExperimentRunner

logger = logging.getLogger(__name__)

_NO_CONTEXT = {'use_temporal': False, 'use_spatial': False}
INRS_ONLY = {**_NO_CONTEXT, 'use_initial': False, 'use_solver': False}

SUITES: Dict[str, Dict[str, Dict[str, object]]] = {
    'components': {
        'full': {},
        '-Temporal': {'use_temporal': False},
        '-Spatial': {'use_spatial': False},
        '-Initial': {'use_initial': False},
        '-Temporal-Spatial': dict(_NO_CONTEXT),
        '-All': dict(INRS_ONLY),
    },
    'robustness': {
        'full': {},
        'inrs': dict(INRS_ONLY),
        'inrs+initial': {**_NO_CONTEXT, 'use_solver': False},
        'inrs+solver': {**_NO_CONTEXT, 'use_initial': False},
        'full-lc': {'use_continuity': False},
    },
    'activation': {
        'sine': {'inr_activation': 'sine'},
        'gelu': {'inr_activation': 'gelu'},
        'tanh': {'inr_activation': 'tanh'},
    },
}


def variants(suite: str) -> Dict[str, Dict[str, object]]:
    if suite not in SUITES:
        raise ConfigError(f"unknown ablation suite {suite!r}; expected one of {sorted(SUITES)}")
    return SUITES[suite]


def ablate(experiment: ExperimentConfig, suite: str = 'components',
           data: Optional[PreparedData] = None,
           out_dir: Optional[str] = None) -> Tuple[ReportTable, pd.DataFrame]:
    """Run every variant of a suite sequentially; returns the table and per-variant deltas."""
    suite_variants = variants(suite)
    for overrides in suite_variants.values():
        for horizon in experiment.horizons:
            experiment.for_run(horizon, **overrides).validate()

    runner = ExperimentRunner(experiment, data, out_dir)
    table = ReportTable()
    for name, overrides in suite_variants.items():
        table.extend(runner.run_variant(name, overrides))
    reference = next(iter(suite_variants))
    logger.info(f"Ablation suite {suite} finished: {len(table)} rows")
    return table, table.deltas(reference)
