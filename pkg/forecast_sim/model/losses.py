"""
Training objectives: Smooth L1 and the prediction, first-difference and
continuity terms. The lookback reconstruction term is minimized in closed
form by the ridge decoder and is not part of the total.
"""

from typing import Optional, Tuple

from core.autodiff.ops import concat, smooth_l1_core
from core.autodiff.tensor import Tensor, as_tensor
from core.errors import ContractError, DimensionError
from core.models.base import LossReport


def smooth_l1(pred, target, beta: float = 1.0) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError("smooth_l1", pred.shape, target.shape)
    return smooth_l1_core(pred - target, beta).mean()


def _row(x_init) -> Tensor:
    """[..., C] -> [..., 1, C]"""
    x_init = as_tensor(x_init)
    return x_init.reshape(x_init.shape[:-1] + (1, x_init.shape[-1]))


def prediction_loss(decoded_deltas, Y, x_init, beta: float = 1.0) -> Tensor:
    """Smooth L1 between decoded horizon deltas and Y - x_init."""
    return smooth_l1(decoded_deltas, as_tensor(Y) - _row(x_init), beta)


def with_anchor(sequence, anchor) -> Tensor:
    """Prepend the anchor row so the first horizon step has a predecessor."""
    return concat([_row(anchor), as_tensor(sequence)], axis=-2)


def first_difference_loss(predictions, targets, beta: float = 1.0) -> Tensor:
    """Smooth L1 between successive differences along the time axis."""
    predictions, targets = as_tensor(predictions), as_tensor(targets)
    if predictions.shape != targets.shape:
        raise DimensionError("first_difference_loss", predictions.shape, targets.shape)
    if predictions.ndim < 2 or predictions.shape[-2] < 2:
        raise ContractError(f"first differences need at least 2 steps, got shape {predictions.shape}")
    pred_diff = predictions[..., 1:, :] - predictions[..., :-1, :]
    target_diff = targets[..., 1:, :] - targets[..., :-1, :]
    return smooth_l1(pred_diff, target_diff, beta)


def total_objective(l_p: Tensor, l_f: Tensor, l_c: Optional[Tensor] = None
                    ) -> Tuple[Tensor, LossReport]:
    """L = L_p + L_c + L_f, with the detached components as a report."""
    if l_c is None:
        l_c = Tensor(0.0)
    total = l_p + l_c + l_f
    return total, LossReport.create(l_p=l_p.item(), l_f=l_f.item(), l_c=l_c.item())
