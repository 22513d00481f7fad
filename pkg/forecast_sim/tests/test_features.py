"""
Tests for the time-index grid, Fourier features, sine stacks and calendar features.
"""

import numpy as np
import pandas as pd
import pytest

from core.autodiff.tensor import Tensor
from core.errors import ContractError, DimensionError, IngestionError
from core.models.base import Frequency, InrActivation
from core.utils.seeding import substream
from model.features import (CffBank, cff_encode, siren_forward, temporal_feature_names,
                            temporal_features, time_index_grid)
from model.layers import SirenStack


@pytest.mark.unit
class TestTimeIndexGrid:
    def test_small_grid(self):
        np.testing.assert_array_equal(time_index_grid(2, 2).values, [0.0, 0.25, 0.5, 0.75])

    def test_endpoints(self):
        grid = time_index_grid(96, 96)
        assert grid.values[0] == 0.0
        assert grid.values[191] == 191 / 192
        assert len(grid.values) == grid.length == 192

    def test_strictly_increasing_below_one(self):
        grid = time_index_grid(7, 5)
        steps = np.diff(grid.values)
        np.testing.assert_allclose(steps, np.full(11, 1 / 12))
        assert grid.values.max() < 1.0

    def test_zero_lengths(self):
        with pytest.raises(ContractError):
            time_index_grid(0, 4)


@pytest.mark.unit
class TestCff:
    def test_shapes_and_range(self):
        bank = CffBank.create(4, 8, substream(2024, 'cff'))
        out = cff_encode(time_index_grid(8, 4), bank)
        assert bank.output_dim == 2 * 4 * 8
        assert out.shape == (12, 64)
        assert np.all(np.abs(out.data) <= 1.0)

    def test_tau_zero(self):
        bank = CffBank.create(3, 2, substream(0, 'cff'))
        row = cff_encode(time_index_grid(4, 4), bank).data[0]
        for s in range(2):
            block = row[s * 6:(s + 1) * 6]
            np.testing.assert_array_equal(block[:3], np.zeros(3))
            np.testing.assert_array_equal(block[3:], np.ones(3))

    def test_single_scale_unit_frequency(self):
        bank = CffBank(scale_matrices=[np.array([[1.0]])])
        grid = time_index_grid(3, 2)
        expected = np.stack([np.sin(2 * np.pi * grid.values), np.cos(2 * np.pi * grid.values)], axis=-1)
        np.testing.assert_allclose(cff_encode(grid, bank).data, expected, atol=1e-15)

    def test_frozen_and_deterministic(self):
        a = CffBank.create(4, 8, substream(2024, 'cff'))
        b = CffBank.create(4, 8, substream(2024, 'cff'))
        for ma, mb in zip(a.scale_matrices, b.scale_matrices):
            assert np.array_equal(ma, mb)
            assert not ma.flags.writeable
        assert not cff_encode(time_index_grid(2, 2), a).requires_grad

    def test_scale_grows(self):
        bank = CffBank.create(2000, 4, substream(1, 'cff'))
        stds = [m.std() for m in bank.scale_matrices]
        for s, std in enumerate(stds):
            assert std == pytest.approx(2.0 ** s, rel=0.1)

    def test_non_sine_activation_duplicates_blocks(self):
        bank = CffBank(scale_matrices=[np.array([[1.0], [2.0]])])
        out = cff_encode(time_index_grid(2, 2), bank, InrActivation.TANH).data
        np.testing.assert_array_equal(out[:, :2], out[:, 2:])


@pytest.mark.unit
class TestSirenStack:
    def test_layer_count_and_init_bounds(self):
        stack = SirenStack(6, 8, 5, InrActivation.SINE, np.random.default_rng(0), omega=30.0)
        assert stack.depth == 5
        assert np.max(np.abs(stack.layers[0].weight.data)) <= 1 / 6
        for layer in stack.layers[1:]:
            assert np.max(np.abs(layer.weight.data)) <= np.sqrt(6 / 8) / 30

    def test_zero_weights_give_zero(self):
        stack = SirenStack(3, 3, 2, InrActivation.SINE, np.random.default_rng(0))
        for layer in stack.layers:
            layer.weight.data[...] = 0.0
            layer.bias.data[...] = 0.0
        np.testing.assert_array_equal(siren_forward(Tensor(np.ones((4, 3))), stack).data, np.zeros((4, 3)))

    def test_identity_weights(self):
        stack = SirenStack(3, 3, 1, InrActivation.SINE, np.random.default_rng(0), omega=1.0)
        stack.layers[0].weight.data[...] = np.eye(3)
        stack.layers[0].bias.data[...] = 0.0
        x = np.array([[np.pi / 2, 1.0, -0.3]])
        np.testing.assert_allclose(siren_forward(Tensor(x), stack).data, np.sin(x), atol=1e-15)

    def test_unrolled_two_layers(self):
        rng = np.random.default_rng(1)
        stack = SirenStack(4, 5, 2, InrActivation.SINE, rng, omega=30.0)
        x = rng.normal(size=(3, 4))
        h = x
        for layer in stack.layers:
            h = np.sin(30.0 * (h @ layer.weight.data + layer.bias.data))
        np.testing.assert_allclose(siren_forward(Tensor(x), stack).data, h, atol=1e-12)
        assert np.all(np.abs(h) <= 1.0)

    def test_dimension_mismatch(self):
        stack = SirenStack(4, 4, 1, InrActivation.SINE, np.random.default_rng(0))
        with pytest.raises(DimensionError):
            siren_forward(Tensor(np.ones((2, 3))), stack)


@pytest.mark.unit
class TestTemporalFeatures:
    def test_hourly_columns_and_range(self):
        stamps = pd.date_range('2016-07-01 00:00:00', periods=48, freq=pd.Timedelta(hours=1))
        feats = temporal_features(stamps, Frequency.HOURLY)
        assert feats.matrix.shape == (48, 4)
        assert feats.feature_names == temporal_feature_names(Frequency.HOURLY)
        assert feats.matrix.min() >= 0.0 and feats.matrix.max() <= 1.0
        assert feats.matrix[0, 0] == 0.0
        assert feats.matrix[23, 0] == 1.0

    def test_calendar_oracle(self):
        stamp = pd.Timestamp('2016-07-01 12:00:00')
        feats = temporal_features([stamp], Frequency.HOURLY).matrix[0]
        # 2016-07-01 was a Friday, day 183 of a leap year
        expected = [12 / 23, 4 / 6, 182 / 365, 6 / 11]
        np.testing.assert_allclose(feats, expected, atol=1e-15)

    def test_monday_is_zero(self):
        feats = temporal_features([pd.Timestamp('2016-07-04 00:00:00')], Frequency.HOURLY)
        assert feats.matrix[0, 1] == 0.0

    def test_leap_day_clipped(self):
        feats = temporal_features([pd.Timestamp('2016-12-31 00:00:00')], Frequency.HOURLY)
        assert feats.matrix[0, 2] == 1.0

    def test_sub_hourly_minutes(self):
        quarter = pd.date_range('2016-07-01', periods=4, freq=pd.Timedelta(minutes=15))
        feats = temporal_features(quarter, Frequency.QUARTER_HOURLY)
        assert feats.matrix.shape == (4, 5)
        np.testing.assert_allclose(feats.matrix[:, 4], [0.0, 15 / 59, 30 / 59, 45 / 59])
        ten = pd.date_range('2016-07-01', periods=6, freq=pd.Timedelta(minutes=10))
        assert temporal_features(ten, Frequency.TEN_MINUTELY).matrix[5, 4] == 1.0

    def test_non_uniform_spacing(self):
        stamps = pd.DatetimeIndex(['2016-07-01 00:00', '2016-07-01 01:00', '2016-07-01 03:00'])
        with pytest.raises(IngestionError):
            temporal_features(stamps, Frequency.HOURLY)
