import pytest

from core.models.config import ExperimentConfig
from data.synthetic import generate_sinusoid, write_ett_csv

# L=8, H=4, S=4 keeps a full train/evaluate cycle well under a second
TINY_OVERRIDES = [
    'horizons=4', 'mu=2', 'stride=4', 'epochs=2', 'batch_size=16', 'lr=0.005',
    'd=4', 'k=1', 'patch_length=4', 'cff_scales=2', 'report_runtime=false',
]


@pytest.fixture
def sinusoid_csv(tmp_path):
    return write_ett_csv(generate_sinusoid(length=240, channels=2, seed=11),
                         str(tmp_path / "sinusoid.csv"))


@pytest.fixture
def tiny_experiment(sinusoid_csv):
    experiment = ExperimentConfig()
    experiment.apply_overrides([f'dataset={sinusoid_csv}'] + TINY_OVERRIDES)
    return experiment


@pytest.fixture
def tiny_argv(sinusoid_csv, tmp_path):
    """Build `<command> --dataset ... --out ... --set ...` for the tiny configuration."""
    def build(command, out=None, *extra):
        argv = [command, '--dataset', sinusoid_csv, '--out', str(out or tmp_path / "out")]
        for item in TINY_OVERRIDES:
            argv += ['--set', item]
        return argv + list(extra)
    return build
