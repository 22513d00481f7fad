"""
Tests for Smooth L1 and the training objectives.
"""

import numpy as np
import pytest

from core.autodiff.tensor import Tensor
from core.errors import ContractError, DimensionError
from model.losses import (first_difference_loss, prediction_loss, smooth_l1, total_objective,
                          with_anchor)


@pytest.mark.unit
class TestSmoothL1:
    def test_equal_is_zero(self):
        x = np.random.default_rng(0).normal(size=(4, 3))
        assert smooth_l1(x, x).item() == 0.0

    def test_outer_branch(self):
        assert smooth_l1(Tensor([2.0]), Tensor([0.0]), beta=1.0).item() == 1.5

    def test_loop_oracle(self):
        rng = np.random.default_rng(1)
        pred, target = rng.normal(size=(5, 3)) * 2, rng.normal(size=(5, 3))
        total = 0.0
        for p, t in zip(pred.ravel(), target.ravel()):
            e = p - t
            total += 0.5 * e * e if abs(e) < 1.0 else abs(e) - 0.5
        assert smooth_l1(pred, target).item() == pytest.approx(total / pred.size, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            smooth_l1(np.zeros(3), np.zeros(4))

    def test_positive_for_nonzero_residual(self):
        assert smooth_l1(np.array([1e-3]), np.zeros(1)).item() > 0.0


@pytest.mark.unit
class TestPredictionLoss:
    def test_perfect_deltas(self):
        rng = np.random.default_rng(2)
        Y, x_init = rng.normal(size=(4, 2)), rng.normal(size=2)
        assert prediction_loss(Y - x_init, Y, x_init).item() == 0.0

    def test_persistence_fixpoint(self):
        x_init = np.array([0.3, -1.2])
        Y = np.tile(x_init, (5, 1))
        assert prediction_loss(np.zeros((5, 2)), Y, x_init).item() == 0.0

    def test_compositional_oracle(self):
        rng = np.random.default_rng(3)
        deltas, Y, x_init = rng.normal(size=(2, 4, 3)), rng.normal(size=(2, 4, 3)), rng.normal(size=(2, 3))
        expected = smooth_l1(deltas, Y - x_init[:, None, :]).item()
        assert prediction_loss(deltas, Y, x_init).item() == pytest.approx(expected, abs=1e-15)


@pytest.mark.unit
class TestFirstDifferenceLoss:
    def test_identical(self):
        x = np.random.default_rng(4).normal(size=(6, 2))
        assert first_difference_loss(x, x).item() == 0.0

    def test_constant_sequences(self):
        assert first_difference_loss(np.full((5, 2), 3.0), np.full((5, 2), -1.0)).item() == 0.0

    def test_same_slope_offset(self):
        t = np.arange(6.0)[:, None]
        assert first_difference_loss(2 * t + 5.0, 2 * t).item() == pytest.approx(0.0, abs=1e-15)

    def test_invariant_to_constant_shift(self):
        rng = np.random.default_rng(5)
        pred, target = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        shift = rng.normal(size=3)
        assert first_difference_loss(pred + shift, target).item() == pytest.approx(
            first_difference_loss(pred, target).item(), abs=1e-12)

    def test_too_short(self):
        with pytest.raises(ContractError):
            first_difference_loss(np.zeros((1, 2)), np.zeros((1, 2)))

    def test_anchor_prepended(self):
        seq = with_anchor(np.ones((3, 2)), np.zeros(2))
        assert seq.shape == (4, 2)
        np.testing.assert_array_equal(seq.data[0], np.zeros(2))


@pytest.mark.unit
class TestTotalObjective:
    def test_report_sum(self):
        total, report = total_objective(Tensor(0.25), Tensor(0.5), Tensor(0.125))
        assert report.total == report.l_p + report.l_c + report.l_f
        assert total.item() == report.total
        assert report.as_dict() == {'l_p': 0.25, 'l_f': 0.5, 'l_c': 0.125, 'total': 0.875}

    def test_missing_continuity_is_zero(self):
        _, report = total_objective(Tensor(1.0), Tensor(2.0))
        assert report.l_c == 0.0
        assert report.total == 3.0
