"""
Tests for the optimizer, checkpoints and the training engine.
"""

from dataclasses import replace

import numpy as np
import pytest

from core.autodiff.tensor import parameter
from core.errors import ConfigError, ContractError, NumericError
from simulation.engine.checkpoint import load_checkpoint, save_checkpoint
from simulation.engine.optim import Adam, AdamState, adam_step, clip_grad_norm, global_grad_norm
from simulation.engine.trainer import (PreparedData, Trainer, evaluate, forecast_errors,
                                       restore_model, search_mu, train)


@pytest.fixture
def tiny_data(tiny_experiment):
    return PreparedData.load(tiny_experiment.train)


@pytest.fixture
def tiny_config(tiny_experiment):
    return tiny_experiment.for_run(4)


@pytest.mark.unit
class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        p = parameter(np.array([1.0, -2.0]))
        state = AdamState()
        for _ in range(5):
            adam_step({'p': p}, {'p': np.zeros(2)}, state, lr=0.1)
        np.testing.assert_array_equal(p.data, [1.0, -2.0])
        assert state.step == 5

    def test_constant_gradient_closed_form(self):
        p0 = np.array([0.5, 1.0, -3.0])
        g = np.array([0.2, -4.0, 1e-3])
        p = parameter(p0.copy())
        state = AdamState()
        lr, eps = 0.01, 1e-8
        for _ in range(7):
            adam_step({'p': p}, {'p': g}, state, lr=lr, eps=eps)
        expected = p0 - 7 * lr * g / (np.abs(g) + eps)
        np.testing.assert_allclose(p.data, expected, rtol=0, atol=1e-9)

    def test_quadratic_descends(self):
        p = parameter(np.array([3.0, -2.0]))
        optimizer = Adam({'p': p}, lr=0.1)
        start = float(np.sum(p.data ** 2))
        for _ in range(50):
            optimizer.zero_grad()
            (p * p).sum().backward()
            optimizer.step()
        assert float(np.sum(p.data ** 2)) < start

    def test_missing_gradient(self):
        with pytest.raises(ContractError):
            adam_step({'p': parameter(np.ones(2))}, {'p': None}, AdamState(), lr=0.1)


@pytest.mark.unit
class TestClipGradNorm:
    def test_rescales_jointly(self):
        a, b = parameter(np.zeros(2)), parameter(np.zeros(1))
        a.grad, b.grad = np.array([3.0, 0.0]), np.array([4.0])
        norm, clipped = clip_grad_norm({'a': a, 'b': b}, 1.0)
        assert norm == 5.0 and clipped
        assert global_grad_norm({'a': a, 'b': b}) == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(a.grad / b.grad[0], [0.75, 0.0])

    def test_below_threshold_untouched(self):
        a = parameter(np.zeros(2))
        a.grad = np.array([0.3, 0.4])
        assert clip_grad_norm({'a': a}, 5.0) == (pytest.approx(0.5), False)
        np.testing.assert_array_equal(a.grad, [0.3, 0.4])


@pytest.mark.unit
def test_forecast_errors():
    assert forecast_errors(np.zeros((2, 3)), np.zeros((2, 3))) == (0.0, 0.0)
    assert forecast_errors(np.ones((2, 3)), np.zeros((2, 3))) == (1.0, 1.0)
    assert forecast_errors(np.array([2.0, 0.0]), np.zeros(2)) == (2.0, 1.0)


@pytest.mark.integration
class TestTrainer:
    def test_zero_epochs(self, tiny_config, tiny_data):
        checkpoint = Trainer(replace(tiny_config, epochs=0), tiny_data).train()
        assert checkpoint.history.epochs_run == 0
        assert checkpoint.history.best_epoch == -1
        assert checkpoint.history.initial_val_lp is None

    def test_history_and_best_epoch(self, tiny_config, tiny_data):
        checkpoint = Trainer(tiny_config, tiny_data).train()
        history = checkpoint.history
        assert 1 <= history.epochs_run <= 2
        assert len(history.val_lp) == history.epochs_run
        assert history.initial_val_lp is not None
        assert history.best_val_lp <= history.initial_val_lp
        assert all(np.isfinite(history.train_total))

    def test_deterministic(self, tiny_config, tiny_data):
        first = Trainer(tiny_config, tiny_data).train()
        second = Trainer(tiny_config, tiny_data).train()
        assert first.history.val_lp == second.history.val_lp
        for name, values in first.params.items():
            assert np.array_equal(values, second.params[name]), name

    def test_restored_model_matches_best_state(self, tiny_config, tiny_data):
        trainer = Trainer(tiny_config, tiny_data)
        checkpoint = trainer.train()
        model = restore_model(checkpoint)
        for name, p in model.parameters().items():
            assert np.array_equal(p.data, checkpoint.params[name]), name

    def test_non_finite_data(self, tiny_config, tiny_data):
        tiny_data.dataset.values[:, 0] = np.nan
        with pytest.raises(NumericError, match="initial validation, batch 0"):
            Trainer(tiny_config, tiny_data).train()

    def test_non_finite_training_row_names_epoch_and_batch(self, tiny_config, tiny_data, caplog):
        tiny_data.dataset.values[10, 0] = np.nan
        with pytest.raises(NumericError, match=r"epoch 0, batch \d+") as error:
            Trainer(tiny_config, tiny_data).train()
        assert 'epoch' in str(error.value)
        assert any(r.levelname == 'ERROR' and 'epoch 0' in r.getMessage() for r in caplog.records)

    def test_missing_dataset(self, tiny_config):
        with pytest.raises(ConfigError):
            PreparedData.load(replace(tiny_config, dataset=''))

    def test_indivisible_patch(self, tiny_config, tiny_data):
        config = replace(tiny_config, model=replace(tiny_config.model, patch_length=5))
        with pytest.raises(ConfigError):
            Trainer(config, tiny_data)

    def test_evaluate_checkpoint(self, tiny_config, tiny_data):
        checkpoint = Trainer(tiny_config, tiny_data).train()
        mse, mae = evaluate(checkpoint, 'test', data=tiny_data)
        assert 0.0 <= mse and 0.0 <= mae
        assert np.isfinite(mse) and np.isfinite(mae)
        with pytest.raises(ConfigError):
            evaluate(checkpoint, 'test', horizon=8, data=tiny_data)


@pytest.mark.integration
class TestCheckpoint:
    def test_round_trip_bit_exact(self, tiny_config, tiny_data, tmp_path):
        checkpoint = Trainer(tiny_config, tiny_data).train()
        checkpoint.variant = '-Initial'
        path = save_checkpoint(checkpoint, str(tmp_path / "ckpt.json"))
        loaded = load_checkpoint(path)
        assert loaded.config == checkpoint.config
        assert loaded.variant == '-Initial'
        assert loaded.history == checkpoint.history
        assert (loaded.lookback, loaded.horizon, loaded.channels) == (8, 4, 2)
        for name, values in checkpoint.params.items():
            assert np.array_equal(loaded.params[name], values), name
        assert evaluate(loaded, data=tiny_data) == evaluate(checkpoint, data=tiny_data)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"magic": "NOTACKPT", "version": 1}', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_checkpoint(str(path))

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('not json', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_checkpoint(str(path))


@pytest.mark.integration
class TestLookbackSearch:
    def test_skips_multipliers_longer_than_validation(self, tiny_config, tiny_data, caplog):
        # H=8: L+H = 8(mu+1) exceeds the 48 validation rows for mu >= 7
        config = replace(tiny_config, horizon=8, epochs=1, mu_search=True)
        with caplog.at_level('WARNING'):
            mu, checkpoint = search_mu(config, tiny_data)
        assert mu in (1, 3, 5)
        assert checkpoint.config.mu == mu
        assert not checkpoint.config.mu_search
        assert 'Skipping mu=7' in caplog.text and 'Skipping mu=9' in caplog.text

    def test_patch_divisibility_skips(self, tiny_config, tiny_data, caplog):
        # H=4, S=12: L+H = 4(mu+1) is a multiple of 12 only for mu=5
        config = replace(tiny_config, epochs=1, model=replace(tiny_config.model, patch_length=12))
        with caplog.at_level('WARNING'):
            mu, _ = search_mu(config, tiny_data)
        assert mu == 5
        assert 'Skipping mu=1' in caplog.text

    def test_train_dispatches_to_search(self, tiny_config, tiny_data):
        config = replace(tiny_config, epochs=1, mu_search=True,
                         model=replace(tiny_config.model, patch_length=12))
        assert train(config, tiny_data).config.mu == 5

    def test_nothing_fits(self, tiny_config, tiny_data):
        config = replace(tiny_config, horizon=40, epochs=1)
        with pytest.raises(ConfigError):
            search_mu(config, tiny_data)
