"""
Checkpoint container.

Layout (UTF-8 JSON):

    {
      "magic": "PDETIME1",
      "version": 1,
      "variant": "full",
      "config": {... TrainConfig fields, "model": {... ModelConfig fields}},
      "shape": {"lookback": L, "horizon": H, "temporal_width": t, "channels": C},
      "history": {"train_total": [...], "val_lp": [...], "initial_val_lp": x | null,
                  "best_epoch": e},
      "params": {"<dotted name>": {"shape": [...], "data": [row-major floats]}}
    }

Floats are written with their shortest round-trip repr, so a reload restores
every parameter bit-for-bit.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from core.errors import ConfigError
from core.models.config import ModelConfig, TrainConfig

logger = logging.getLogger(__name__)

MAGIC = "PDETIME1"
VERSION = 1


@dataclass
class TrainingHistory:
    train_total: List[float] = field(default_factory=list)
    val_lp: List[float] = field(default_factory=list)
    initial_val_lp: Optional[float] = None
    best_epoch: int = -1

    @property
    def epochs_run(self) -> int:
        return len(self.train_total)

    @property
    def best_val_lp(self) -> float:
        if self.best_epoch >= 0:
            return self.val_lp[self.best_epoch]
        return self.initial_val_lp if self.initial_val_lp is not None else float('inf')


@dataclass
class Checkpoint:
    config: TrainConfig
    params: Dict[str, np.ndarray]
    lookback: int
    horizon: int
    temporal_width: int
    channels: int
    history: TrainingHistory = field(default_factory=TrainingHistory)
    variant: str = "full"


def config_to_dict(config: TrainConfig) -> dict:
    data = asdict(config)
    data['split'] = list(config.split)
    return data


def config_from_dict(data: dict) -> TrainConfig:
    data = dict(data)
    model = ModelConfig(**data.pop('model'))
    data['split'] = tuple(data['split'])
    return TrainConfig(model=model, **data)


def save_checkpoint(checkpoint: Checkpoint, path: str) -> str:
    payload = {
        'magic': MAGIC,
        'version': VERSION,
        'variant': checkpoint.variant,
        'config': config_to_dict(checkpoint.config),
        'shape': {
            'lookback': checkpoint.lookback,
            'horizon': checkpoint.horizon,
            'temporal_width': checkpoint.temporal_width,
            'channels': checkpoint.channels,
        },
        'history': asdict(checkpoint.history),
        'params': {
            name: {'shape': list(values.shape), 'data': values.reshape(-1).tolist()}
            for name, values in sorted(checkpoint.params.items())
        },
    }
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(payload, handle)
    logger.info(f"Saved checkpoint with {len(checkpoint.params)} parameter tensors to {path}")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, encoding='utf-8') as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from None
    if payload.get('magic') != MAGIC:
        raise ConfigError(f"{path} is not a checkpoint (magic {payload.get('magic')!r})")
    if payload.get('version') != VERSION:
        raise ConfigError(f"unsupported checkpoint version {payload.get('version')}")
    params = {
        name: np.asarray(blob['data'], dtype=np.float64).reshape(blob['shape'])
        for name, blob in payload['params'].items()
    }
    shape = payload['shape']
    return Checkpoint(
        config=config_from_dict(payload['config']),
        params=params,
        lookback=shape['lookback'],
        horizon=shape['horizon'],
        temporal_width=shape['temporal_width'],
        channels=shape['channels'],
        history=TrainingHistory(**payload['history']),
        variant=payload.get('variant', 'full'),
    )
