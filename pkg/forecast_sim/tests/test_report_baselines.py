"""
Tests for metric tables, the comparators and the ablation suites.
"""

import numpy as np
import pandas as pd
import pytest

from core.errors import ConfigError, NumericError
from data.synthetic import generate_constant, write_ett_csv
from simulation.engine.trainer import PreparedData
from simulation.report import COLUMNS, ReportRow, ReportTable
from simulation.scenarios.ablation import SUITES, ablate, variants
from simulation.scenarios.baselines import LinearLookbackBaseline, baseline, persistence_forecast


def _row(variant, mse, horizon=96, seed=2024):
    return ReportRow('toy', horizon, variant, mse, mse / 2, 0.0, seed)


@pytest.mark.unit
class TestReportTable:
    def test_columns(self, tmp_path):
        table = ReportTable()
        table.add(_row('full', 0.5))
        path = table.write_csv(str(tmp_path / "metrics.csv"))
        with open(path, encoding='utf-8') as handle:
            assert handle.readline().strip() == ','.join(COLUMNS)

    def test_duplicate_rejected(self):
        table = ReportTable()
        table.add(_row('full', 0.5))
        with pytest.raises(ValueError):
            table.add(_row('full', 0.6))
        table.add(_row('full', 0.6, seed=1))
        assert len(table) == 2

    def test_non_finite_row(self):
        with pytest.raises(NumericError):
            _row('full', float('nan'))

    def test_deltas(self):
        table = ReportTable()
        for variant, mse in [('full', 0.5), ('-Initial', 0.75), ('-All', 1.0)]:
            table.add(_row(variant, mse))
        deltas = table.deltas('full').set_index('variant')
        assert deltas.loc['full', 'delta_mse'] == 0.0
        assert deltas.loc['-Initial', 'delta_mse'] == 0.25
        assert deltas.loc['-All', 'delta_mae'] == 0.25

    def test_lookup(self):
        table = ReportTable()
        table.add(_row('full', 0.5, horizon=24))
        assert table.lookup('full', 24, 2024).mse == 0.5
        with pytest.raises(KeyError):
            table.lookup('full', 96, 2024)


@pytest.mark.unit
class TestPersistence:
    def test_shape_and_values(self):
        x_init = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = persistence_forecast(x_init, 3)
        assert out.shape == (2, 3, 2)
        np.testing.assert_array_equal(out[1], [[3.0, 4.0]] * 3)

    def test_constant_series_is_exact(self):
        assert np.all(persistence_forecast(np.full(3, 0.7), 5) == 0.7)


@pytest.mark.integration
class TestBaselines:
    def test_linear_beats_persistence_on_sinusoid(self, tiny_experiment):
        table = baseline(tiny_experiment)
        persistence = table.lookup('persistence', 4, 2024)
        linear = table.lookup('linear', 4, 2024)
        assert linear.mse <= persistence.mse
        assert persistence.runtime_s == 0.0

    def test_linear_fits_sinusoid_recurrence(self, tiny_experiment):
        data = PreparedData.load(tiny_experiment.train)
        windows = data.windows('train', 8, 4)
        model = LinearLookbackBaseline(alpha=1e-8).fit(windows)
        predictions = model.predict(windows)
        assert predictions.shape == (len(windows), 4, 2)
        assert np.mean((predictions - np.stack([w.Y for w in windows])) ** 2) < 0.05


@pytest.mark.unit
def test_unknown_suite():
    with pytest.raises(ConfigError):
        variants('everything')


@pytest.mark.unit
def test_suite_references():
    assert next(iter(SUITES['components'])) == 'full'
    assert list(SUITES['components']) == ['full', '-Temporal', '-Spatial', '-Initial',
                                          '-Temporal-Spatial', '-All']
    assert SUITES['components']['-All']['use_solver'] is False
    assert list(SUITES['activation']) == ['sine', 'gelu', 'tanh']


@pytest.mark.integration
def test_ablate_components(tiny_experiment, tmp_path):
    tiny_experiment.train.epochs = 1
    table, deltas = ablate(tiny_experiment, 'components', out_dir=str(tmp_path))
    assert len(table) == 6
    assert set(deltas['variant']) == set(SUITES['components'])
    assert deltas.set_index('variant').loc['full', 'delta_mse'] == 0.0
    assert len(list(tmp_path.glob("checkpoint_*.json"))) == 6


@pytest.mark.integration
def test_ablate_constant_levels_needs_initial_condition(tiny_experiment, tmp_path):
    # train rows sit at one level, validation and test rows at another, so every window is constant
    frame = pd.concat([generate_constant(144, [1.0, -2.0]),
                       generate_constant(96, [3.0, 0.5], start='2016-07-07 00:00:00')],
                      ignore_index=True)
    path = write_ett_csv(frame, str(tmp_path / "levels.csv"))
    tiny_experiment.apply_overrides([f'dataset={path}', 'epochs=1'])
    table, _ = ablate(tiny_experiment, 'components')
    full = table.lookup('full', 4, 2024)
    without_initial = table.lookup('-Initial', 4, 2024)
    assert full.mse <= 1e-20
    assert without_initial.mse > full.mse
