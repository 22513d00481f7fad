"""
Typed run configuration and its sectioned key/value file format.

Grammar (configparser INI):

    [data]      dataset, split, horizons, mu, mu_search, stride, raw_metrics
    [model]     d, k, n_layers, n_heads, patch_length, ridge_lambda, cff_scales,
                siren_omega, inr_activation, use_temporal, use_spatial,
                use_initial, use_solver, use_continuity, smooth_l1_beta
    [train]     lr, batch_size, epochs, patience, clip_norm, seed, seeds
    [report]    report_runtime

Keys are unique across sections, so `--set key=value` overrides address them
without a section prefix. Lists are comma separated, booleans are true/false.
"""

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

from core.errors import ConfigError
from core.models.base import InrActivation, SplitSpec

MU_GRID = (1, 3, 5, 7, 9)
LEARNING_RATES = (1e-4, 1e-3, 5e-3)


@dataclass
class ModelConfig:
    d: int = 64
    k: int = 5
    n_layers: int = 1
    n_heads: int = 1
    patch_length: int = 12
    ridge_lambda: float = 1.0
    cff_scales: int = 8
    siren_omega: float = 30.0
    inr_activation: str = "sine"
    use_temporal: bool = True
    use_spatial: bool = True
    use_initial: bool = True
    use_solver: bool = True
    use_continuity: bool = True
    smooth_l1_beta: float = 1.0

    @property
    def activation(self) -> InrActivation:
        return InrActivation(self.inr_activation)

    def validate(self) -> None:
        if self.d < 2 or self.d % 2:
            raise ConfigError(f"d must be a positive even number, got {self.d}")
        if self.k < 1 or self.n_layers < 1:
            raise ConfigError(f"k and n_layers must be >= 1, got k={self.k}, n_layers={self.n_layers}")
        if self.n_heads < 1 or self.d % self.n_heads:
            raise ConfigError(f"n_heads={self.n_heads} must divide d={self.d}")
        if self.patch_length < 1:
            raise ConfigError(f"patch_length must be >= 1, got {self.patch_length}")
        if self.ridge_lambda <= 0:
            raise ConfigError(f"ridge_lambda must be positive, got {self.ridge_lambda}")
        if self.cff_scales < 1:
            raise ConfigError(f"cff_scales must be >= 1, got {self.cff_scales}")
        if self.smooth_l1_beta <= 0:
            raise ConfigError(f"smooth_l1_beta must be positive, got {self.smooth_l1_beta}")
        try:
            self.activation
        except ValueError:
            raise ConfigError(f"unknown inr_activation {self.inr_activation!r}") from None


@dataclass
class TrainConfig:
    dataset: str = ""
    split: Tuple[float, ...] = (0.6, 0.2, 0.2)
    horizon: int = 96
    mu: int = 1
    mu_search: bool = False
    stride: int = 1
    raw_metrics: bool = False
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 10
    patience: int = 3
    clip_norm: float = 5.0
    seed: int = 2024
    model: ModelConfig = field(default_factory=ModelConfig)

    @property
    def lookback(self) -> int:
        return self.mu * self.horizon

    @property
    def window_length(self) -> int:
        return self.lookback + self.horizon

    def validate(self) -> None:
        self.model.validate()
        SplitSpec.create(self.split)
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.horizon < 1 or self.mu < 1 or self.stride < 1:
            raise ConfigError(f"horizon, mu and stride must be >= 1 "
                              f"(H={self.horizon}, mu={self.mu}, stride={self.stride})")
        if self.epochs < 0 or self.patience < 1:
            raise ConfigError(f"epochs must be >= 0 and patience >= 1 "
                              f"(epochs={self.epochs}, patience={self.patience})")
        if self.model.use_solver and self.window_length % self.model.patch_length:
            raise ConfigError(
                f"L+H={self.window_length} (L={self.lookback}, H={self.horizon}) is not divisible "
                f"by patch_length S={self.model.patch_length}")


@dataclass
class ExperimentConfig:
    """Everything one run directory needs: a base TrainConfig plus the sweep axes."""
    train: TrainConfig = field(default_factory=TrainConfig)
    horizons: List[int] = field(default_factory=lambda: [96])
    seeds: List[int] = field(default_factory=list)
    report_runtime: bool = True

    SECTIONS = {
        'data': ('dataset', 'split', 'horizons', 'mu', 'mu_search', 'stride', 'raw_metrics'),
        'model': tuple(f.name for f in fields(ModelConfig)),
        'train': ('lr', 'batch_size', 'epochs', 'patience', 'clip_norm', 'seed', 'seeds'),
        'report': ('report_runtime',),
    }

    @classmethod
    def keys(cls) -> Dict[str, str]:
        """Flat key -> section map."""
        return {key: section for section, names in cls.SECTIONS.items() for key in names}

    @classmethod
    def from_file(cls, path: Optional[str] = None) -> 'ExperimentConfig':
        config = cls()
        if path is None:
            return config
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding='utf-8') as handle:
                parser.read_file(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        known = cls.keys()
        for section in parser.sections():
            if section not in cls.SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if known.get(key) != section:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                config.set(key, value)
        return config

    def _owner(self, key: str):
        if key in ('horizons', 'seeds', 'report_runtime'):
            return self
        if key in {f.name for f in fields(ModelConfig)}:
            return self.train.model
        return self.train

    def get(self, key: str):
        if key not in self.keys():
            raise ConfigError(f"unknown config key {key!r}")
        return getattr(self._owner(key), key)

    def set(self, key: str, raw: str) -> None:
        current = self.get(key)
        setattr(self._owner(key), key, _coerce(key, raw, current))

    def apply_overrides(self, overrides: List[str]) -> None:
        for item in overrides:
            if '=' not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, value = item.split('=', 1)
            self.set(key.strip(), value.strip())

    def run_seeds(self) -> List[int]:
        return list(self.seeds) if self.seeds else [self.train.seed]

    def for_run(self, horizon: int, seed: Optional[int] = None, **model_overrides) -> TrainConfig:
        model = replace(self.train.model, **model_overrides)
        return replace(self.train, horizon=horizon,
                       seed=self.train.seed if seed is None else seed, model=model)

    def validate(self) -> None:
        if not self.horizons:
            raise ConfigError("horizons must list at least one horizon")
        for horizon in self.horizons:
            self.for_run(horizon).validate()

    def to_ini(self) -> str:
        lines = []
        for section, names in self.SECTIONS.items():
            lines.append(f"[{section}]")
            lines.extend(f"{name} = {_format(self.get(name))}" for name in names)
            lines.append("")
        return "\n".join(lines)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(key: str, raw: str, current):
    try:
        if isinstance(current, bool):
            lowered = raw.lower()
            if lowered in ('true', 'yes', '1', 'on'):
                return True
            if lowered in ('false', 'no', '0', 'off'):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, tuple):
            return tuple(float(v) for v in raw.split(',') if v.strip())
        if isinstance(current, list):
            return [int(v) for v in raw.split(',') if v.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key} ({type(current).__name__})") from None
