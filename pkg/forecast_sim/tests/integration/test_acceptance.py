"""
End-to-end acceptance runs on generated and (when present) real data.
"""

import os

import pytest

from core.models.config import ExperimentConfig
from data.dataset import load_csv
from data.synthetic import generate_sinusoid, write_ett_csv
from run import EXIT_OK, run
from simulation.engine.trainer import PreparedData, Trainer
from simulation.scenarios.ablation import ablate
from simulation.scenarios.baselines import baseline
from simulation.scenarios.experiment import ExperimentRunner

ETTH1_PATH = os.getenv("FORECAST_SIM_ETTH1", os.path.join("data", "ETTh1.csv"))


@pytest.fixture(scope="module")
def acceptance_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("acceptance") / "sinusoid.csv"
    return write_ett_csv(generate_sinusoid(length=4000, channels=3, noise_std=0.01), str(path))


@pytest.fixture(scope="module")
def acceptance_data(acceptance_csv):
    return PreparedData.create(load_csv(acceptance_csv), (0.6, 0.2, 0.2))


def _experiment(csv, *overrides):
    experiment = ExperimentConfig()
    experiment.apply_overrides([f'dataset={csv}', 'report_runtime=false', *overrides])
    return experiment


@pytest.mark.integration
@pytest.mark.performance
def test_sinusoid_beats_persistence(acceptance_csv, acceptance_data):
    experiment = _experiment(acceptance_csv, 'horizons=96', 'epochs=5')
    table = ExperimentRunner(experiment, acceptance_data).run_variant('full')
    full = table.lookup('full', 96, 2024)
    persistence = baseline(experiment, acceptance_data).lookup('persistence', 96, 2024)
    assert full.mse <= 0.05
    assert full.mse <= 0.5 * persistence.mse


@pytest.mark.integration
def test_repeat_runs_are_identical(acceptance_csv, acceptance_data, tmp_path):
    experiment = _experiment(acceptance_csv, 'horizons=24', 'epochs=1', 'stride=8', 'd=8', 'k=2',
                             'cff_scales=2')
    first = ExperimentRunner(experiment, acceptance_data).run_variant('full').to_frame()
    second = ExperimentRunner(experiment, acceptance_data).run_variant('full').to_frame()
    first_path, second_path = tmp_path / "a.csv", tmp_path / "b.csv"
    first.to_csv(first_path, index=False)
    second.to_csv(second_path, index=False)
    assert first_path.read_bytes() == second_path.read_bytes()


@pytest.mark.integration
@pytest.mark.performance
def test_initial_condition_helps(acceptance_csv, acceptance_data):
    experiment = _experiment(acceptance_csv, 'horizons=96', 'epochs=3', 'stride=4')
    table, _ = ablate(experiment, 'components', acceptance_data)
    full = table.lookup('full', 96, 2024)
    without_initial = table.lookup('-Initial', 96, 2024)
    assert without_initial.mse >= full.mse - 1e-6


@pytest.mark.integration
@pytest.mark.performance
@pytest.mark.skipif(not os.path.isfile(ETTH1_PATH), reason="ETTh1.csv not available")
def test_etth1_reduced_run():
    experiment = _experiment(ETTH1_PATH, 'horizons=96', 'd=128', 'n_layers=1', 'epochs=10', 'mu=1')
    data = PreparedData.load(experiment.train)
    assert data.dataset.length == 17420 and data.dataset.n_channels == 7
    comparators = baseline(experiment, data)
    persistence = comparators.lookup('persistence', 96, 2024)
    linear = comparators.lookup('linear', 96, 2024)
    full = ExperimentRunner(experiment, data).run_variant('full').lookup('full', 96, 2024)
    assert full.mse < persistence.mse
    assert full.mse <= 2.0 * linear.mse


@pytest.mark.integration
@pytest.mark.performance
def test_training_reduces_validation_loss_tenfold(acceptance_csv, acceptance_data):
    experiment = _experiment(acceptance_csv, 'horizons=96', 'epochs=5')
    history = Trainer(experiment.for_run(96), acceptance_data).train().history
    assert history.best_epoch >= 0
    assert history.initial_val_lp / history.best_val_lp >= 10.0


@pytest.mark.integration
@pytest.mark.performance
def test_repeat_cli_runs_write_identical_metrics(acceptance_csv, tmp_path):
    written = []
    for name in ('first', 'second'):
        out = tmp_path / name
        argv = ['train', '--dataset', acceptance_csv, '--out', str(out),
                '--set', 'horizons=96', '--set', 'epochs=5', '--set', 'report_runtime=false']
        assert run(argv) == EXIT_OK
        written.append((out / "metrics.csv").read_bytes())
    assert written[0] == written[1]
