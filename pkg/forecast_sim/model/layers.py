"""
Parameter containers shared by the encoder and solver.
"""

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from core.autodiff.ops import layer_norm
from core.autodiff.tensor import Tensor, parameter
from core.errors import DimensionError
from core.models.base import InrActivation


class Module:
    """Owns named parameters; sub-modules and module lists are discovered by attribute."""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> Dict[str, Tensor]:
        return dict(self.named_parameters())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"state is missing parameters: {sorted(missing)}")
        for name, p in params.items():
            values = np.asarray(state[name], dtype=np.float64)
            if values.shape != p.shape:
                raise DimensionError(f"load_state[{name}]", p.shape, values.shape)
            p.data[...] = values


class Linear(Module):
    """Affine map x @ W + b, uniform +-1/sqrt(fan_in) unless a bound is given."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 bound: Optional[float] = None):
        if bound is None:
            bound = 1.0 / np.sqrt(in_features)
        self.in_features = in_features
        self.out_features = out_features
        self.weight = parameter(rng.uniform(-bound, bound, size=(in_features, out_features)))
        self.bias = parameter(rng.uniform(-bound, bound, size=(out_features,)))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise DimensionError("linear", x.shape, self.weight.shape)
        return x @ self.weight + self.bias


class LayerNorm(Module):
    def __init__(self, width: int, eps: float = 1e-12):
        self.eps = eps
        self.gain = parameter(np.ones(width))
        self.shift = parameter(np.zeros(width))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.eps) * self.gain + self.shift


class MLP(Module):
    """affine -> GeLU -> affine."""

    def __init__(self, in_features: int, hidden: int, out_features: int, rng: np.random.Generator):
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(self.fc1(x).gelu())


def activate(x: Tensor, activation: InrActivation) -> Tensor:
    if activation is InrActivation.SINE:
        return x.sin()
    if activation is InrActivation.GELU:
        return x.gelu()
    return x.tanh()


class SirenStack(Module):
    """k affine+activation layers.

    Sine layers compute sin(omega * (x W + b)); the first layer is drawn from
    U(-1/fan_in, 1/fan_in) and deeper ones from U(-sqrt(6/fan_in)/omega, +...).
    GeLU and tanh layers use the plain affine initialization and no omega.
    """

    def __init__(self, in_features: int, width: int, k: int, activation: InrActivation,
                 rng: np.random.Generator, omega: float = 30.0):
        self.activation = activation
        self.omega = omega
        self.layers: List[Linear] = []
        fan_in = in_features
        for i in range(k):
            if activation is not InrActivation.SINE:
                bound = None
            elif i == 0:
                bound = 1.0 / fan_in
            else:
                bound = np.sqrt(6.0 / fan_in) / omega
            self.layers.append(Linear(fan_in, width, rng, bound=bound))
            fan_in = width

    @property
    def depth(self) -> int:
        return len(self.layers)

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            h = layer(x)
            if self.activation is InrActivation.SINE:
                x = (h * self.omega).sin()
            else:
                x = activate(h, self.activation)
        return x
