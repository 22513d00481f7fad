"""
Selftest Scenario

Oracle suites that need no dataset:
1. solver     patched integral against an explicit per-position loop
2. ridge      closed-form fit against the normal equations and the objective gradient
3. gradients  end-to-end backward pass against central finite differences
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from core.autodiff.gradcheck import gradient_check
from core.autodiff.tensor import Tensor
from core.models.base import ForecastWindow, TimeIndexGrid
from core.models.config import ModelConfig
from model.decoder import ridge_fit, ridge_objective_gradient
from model.forecaster import IVPForecaster
from model.solver import integrate_patches

logger = logging.getLogger(__name__)

SOLVER_PATCHES = (1, 2, 4, 6, 12)
SOLVER_LENGTHS = (12, 24, 48)
SOLVER_WIDTHS = (1, 4, 16)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    runtime_s: float

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: max error {self.max_error:.3e} "
                f"(tolerance {self.tolerance:.0e}, {self.runtime_s:.2f}s)")


def integral_oracle(u: np.ndarray, dudt: np.ndarray, patch_length: int) -> np.ndarray:
    """z_j = u_end - sum of dudt after j within j's patch, by explicit loops."""
    total, d = u.shape
    z = np.empty_like(u)
    for i in range(total):
        end = (i // patch_length + 1) * patch_length - 1
        for c in range(d):
            acc = u[end, c]
            for k in range(end, i, -1):
                acc -= dudt[k, c]
            z[i, c] = acc
    return z


def solver_suite(draws: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for S in SOLVER_PATCHES:
        for total in SOLVER_LENGTHS:
            for d in SOLVER_WIDTHS:
                for _ in range(draws):
                    u, dudt = rng.normal(size=(total, d)), rng.normal(size=(total, d))
                    got = integrate_patches(Tensor(u), Tensor(dudt), S).data
                    worst = max(worst, float(np.max(np.abs(got - integral_oracle(u, dudt, S)))))
    return worst


def ridge_suite(instances: int = 50, seed: int = 1) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        z, targets = rng.normal(size=(20, 3)), rng.normal(size=(20, 2))
        W = ridge_fit(z, targets, 1.0).W.data
        Z = np.hstack([z, np.ones((20, 1))])
        oracle = np.linalg.solve(Z.T @ Z + np.eye(4), Z.T @ targets)
        gradient = ridge_objective_gradient(z, targets, W, 1.0)
        worst = max(worst, float(np.max(np.abs(W - oracle))), float(np.max(np.abs(gradient))))
    return worst


def toy_problem(seed: int = 0, **overrides):
    """Small forecaster and window: L=8, H=4, C=2, d=4, S=4, one aggregation layer."""
    config = ModelConfig(d=4, k=2, n_layers=1, n_heads=1, patch_length=4, **overrides)
    model = IVPForecaster(config, lookback=8, horizon=4, temporal_width=4, seed=seed)
    rng = np.random.default_rng(seed + 100)
    X = rng.normal(size=(8, 2))
    window = ForecastWindow(X=X, Y=rng.normal(size=(4, 2)), x_init=X[-1],
                            temporal=rng.uniform(size=(12, 4)),
                            grid=TimeIndexGrid.create(8, 4))
    return model, window


def gradient_suite(seed: int = 0) -> float:
    model, window = toy_problem(seed)

    def loss():
        return model.objective(model.forward(window), window.Y)[0]

    errors = gradient_check(loss, model.parameters())
    return max(errors.values())


SUITES: Dict[str, tuple] = {
    'solver': (solver_suite, 1e-12),
    'ridge': (ridge_suite, 1e-8),
    'gradients': (gradient_suite, 1e-4),
}


def run_selftest(names: Optional[List[str]] = None,
                 report: Callable[[str], None] = print) -> List[SuiteResult]:
    results = []
    for name in names or list(SUITES):
        suite, tolerance = SUITES[name]
        start = time.perf_counter()
        error = suite()
        result = SuiteResult(name, error <= tolerance, error, tolerance, time.perf_counter() - start)
        logger.info(result.describe())
        report(result.describe())
        results.append(result)
    return results
