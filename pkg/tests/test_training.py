"""
Tests for the optimizer, schedules, training loop and grid sweep.
"""
import logging

import numpy as np
import pandas as pd
import pytest

from src.autodiff import Parameter, backward
from src.data import Dataset, read_jsonl
from src.db import Database
from src.errors import ContractViolation, NonFiniteError
from src.evaluation import MetricsCalculator
from src.models import EvalRecord, ModelConfig, RunConfig, TrainConfig
from src.network import ForgeryLocalizer
from src.objectives import compute_losses
from src.training import (
    Adam,
    AdamState,
    EarlyStopping,
    GridSpec,
    PlateauScheduler,
    Trainer,
    adam_step,
    cell_config,
    grid_sweep,
    rank_cells,
)
from src.training.trainer import BEST_CHECKPOINT, HISTORY_FILE, LAST_CHECKPOINT, VAL_PREDICTIONS


@pytest.fixture
def val_dataset(toy_synthetic_config):
    """Validation videos that are all manipulated, so the criterion is always defined."""
    config = toy_synthetic_config.model_copy(update={"real_fraction": 0.0})
    return Dataset.synthetic(config, range(100, 104), name="val")


class TestAdam:
    """Test the Adam update rule."""

    def test_first_step(self):
        """Test the closed-form first step for a unit gradient."""
        param = Parameter(np.array([0.0]))
        state = AdamState.zeros_like([param])
        adam_step([param], [np.array([1.0])], state, lr=0.001)
        assert param.data[0] == pytest.approx(-0.001 / (1.0 + 1e-8), rel=1e-12)
        assert state.step == 1

    def test_zero_gradient(self):
        """Test zero gradients leave parameters unchanged."""
        param = Parameter(np.array([1.5, -2.0]))
        state = AdamState.zeros_like([param])
        for _ in range(5):
            adam_step([param], [np.zeros(2)], state, lr=0.01)
        assert param.data.tolist() == [1.5, -2.0]

    def test_non_finite_gradient(self):
        """Test a NaN gradient aborts with the parameter's name."""
        param = Parameter(np.zeros(3), name="head.weight")
        with pytest.raises(NonFiniteError, match="head.weight"):
            adam_step([param], [np.array([0.0, np.nan, 0.0])], AdamState.zeros_like([param]), lr=0.001)

    def test_shape_mismatch(self):
        """Test mismatched gradient shapes are rejected."""
        param = Parameter(np.zeros(3))
        with pytest.raises(ContractViolation):
            adam_step([param], [np.zeros(4)], AdamState.zeros_like([param]), lr=0.001)

    def test_deterministic_trajectory(self, rng):
        """Test identical runs give bitwise-identical parameters."""
        grads = [rng.normal(size=4) for _ in range(10)]

        def run():
            param = Parameter(np.ones(4))
            state = AdamState.zeros_like([param])
            for grad in grads:
                adam_step([param], [grad], state, lr=0.01)
            return param.data

        assert np.array_equal(run(), run())


class TestSchedules:
    """Test the plateau scheduler and early stopping."""

    def test_plateau_halves_lr(self):
        """Test one plateau event with factor 0.5 takes lr 0.001 to 0.0005."""
        scheduler = PlateauScheduler(factor=0.5, patience=5)
        lr = scheduler.step(1.0, 0.001)
        for _ in range(4):
            lr = scheduler.step(1.0, lr)
        assert lr == 0.001
        lr = scheduler.step(1.0, lr)
        assert lr == 0.0005

    def test_plateau_threshold(self):
        """Test gains below the threshold count as no improvement."""
        scheduler = PlateauScheduler(patience=1, threshold=1e-4)
        scheduler.step(1.0, 0.1)
        assert scheduler.step(1.00005, 0.1) == 0.05
        assert scheduler.step(1.1, 0.05) == 0.05

    def test_early_stopping(self):
        """Test a frozen criterion stops training patience epochs after the best."""
        stopper = EarlyStopping(patience=10)
        epochs = 0
        for epoch in range(100):
            epochs = epoch
            if stopper(0.5):
                break
        assert epochs == 10

    def test_improvement_resets(self):
        """Test an improvement resets the counter."""
        stopper = EarlyStopping(patience=2)
        assert not stopper(0.1)
        assert not stopper(0.1)
        assert not stopper(0.2)
        assert not stopper(0.2)
        assert stopper(0.2)


class TestTrainer:
    """Test the training loop on the toy configuration."""

    def make_trainer(self, out_dir, train_config=None, eval_config=None):
        return Trainer(
            ModelConfig.toy(),
            train_config or TrainConfig(max_epochs=2, batch_size=4, plateau_patience=1, early_stop_patience=2),
            eval_config,
            str(out_dir),
        )

    def test_train_writes_outputs(self, tmp_path, toy_dataset, val_dataset, toy_eval_config):
        """Test a short run produces checkpoints, history and validation predictions."""
        trainer = self.make_trainer(tmp_path, eval_config=toy_eval_config)
        result = trainer.train(toy_dataset, val_dataset)
        assert result.success
        assert result.epochs_run == 2
        for name in (BEST_CHECKPOINT, LAST_CHECKPOINT, HISTORY_FILE, VAL_PREDICTIONS):
            assert (tmp_path / name).exists()
        history = pd.read_csv(tmp_path / HISTORY_FILE)
        assert history["epoch"].tolist() == [0, 1]
        assert np.all(np.isfinite(history[["loss", "loc", "rec", "det"]].to_numpy()))
        assert history["lr"].is_monotonic_decreasing or history["lr"].nunique() == 1

    def test_criterion_replays_from_predictions(self, tmp_path, toy_dataset, val_dataset, toy_eval_config):
        """Test the best criterion equals a recomputation from the saved predictions."""
        trainer = self.make_trainer(tmp_path, eval_config=toy_eval_config)
        result = trainer.train(toy_dataset, val_dataset)
        records = read_jsonl(str(tmp_path / VAL_PREDICTIONS), EvalRecord)
        calculator = MetricsCalculator()
        metrics = calculator.calculate_metrics(records)
        replayed = calculator.criterion(metrics, TrainConfig().criterion_keys())
        assert replayed == pytest.approx(result.best_criterion, abs=1e-12)

    def test_deterministic(self, tmp_path, toy_dataset, val_dataset, toy_eval_config):
        """Test identical runs give identical history and checkpoints."""
        first = self.make_trainer(tmp_path / "a", eval_config=toy_eval_config)
        second = self.make_trainer(tmp_path / "b", eval_config=toy_eval_config)
        first.train(toy_dataset, val_dataset)
        second.train(toy_dataset, val_dataset)
        for name in (BEST_CHECKPOINT, LAST_CHECKPOINT, HISTORY_FILE):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_resume_matches_uninterrupted(self, tmp_path, toy_dataset, val_dataset, toy_eval_config):
        """Test stopping after one epoch and resuming reproduces the two-epoch run."""
        full = self.make_trainer(tmp_path / "full", eval_config=toy_eval_config)
        full.train(toy_dataset, val_dataset)

        one_epoch = TrainConfig(max_epochs=1, batch_size=4, plateau_patience=1, early_stop_patience=2)
        self.make_trainer(tmp_path / "resumed", one_epoch, toy_eval_config).train(toy_dataset, val_dataset)
        resumed = self.make_trainer(tmp_path / "resumed", eval_config=toy_eval_config)
        result = resumed.train(toy_dataset, val_dataset, resume=True)

        assert result.epochs_run == 2
        for name in (LAST_CHECKPOINT, HISTORY_FILE):
            assert (tmp_path / "full" / name).read_bytes() == (tmp_path / "resumed" / name).read_bytes()

    def test_overlapping_splits(self, tmp_path, toy_dataset):
        """Test training refuses a validation set that shares videos with training."""
        with pytest.raises(ContractViolation):
            self.make_trainer(tmp_path).train(toy_dataset, toy_dataset)

    def test_empty_validation(self, tmp_path):
        """Test validating on an empty set is a contract violation."""
        with pytest.raises(ContractViolation):
            self.make_trainer(tmp_path).validate(Dataset(name="empty"))

    def test_non_finite_loss(self, tmp_path, toy_dataset, toy_eval_config):
        """Test a NaN loss aborts with the epoch and batch."""
        trainer = self.make_trainer(tmp_path, eval_config=toy_eval_config)
        trainer.model.parameters()[0].data[...] = np.nan
        with pytest.raises(NonFiniteError, match="epoch 0 batch 0"):
            trainer.train_epoch(toy_dataset, 0)

    def test_zero_lr_step(self, toy_dataset):
        """Test a step with lr=0 leaves the loss unchanged."""
        model = ForgeryLocalizer(ModelConfig.toy())
        batch = next(toy_dataset.batches(8, 32))

        def loss():
            recon, pyramid = model.forward(batch)
            return compute_losses(recon, pyramid, batch, model.config).total

        optimizer = Adam(model.parameters(), lr=0.0)
        before = loss()
        backward(before)
        optimizer.step()
        assert loss().item() == before.item()

    def test_descent_on_one_batch(self, toy_dataset):
        """Test repeated Adam steps on one batch drive its loss down."""
        model = ForgeryLocalizer(ModelConfig.toy())
        batch = next(toy_dataset.batches(8, 32))
        optimizer = Adam(model.parameters(), lr=1e-3)
        values = []
        for _ in range(50):
            optimizer.zero_grad()
            recon, pyramid = model.forward(batch)
            total = compute_losses(recon, pyramid, batch, model.config).total
            values.append(total.item())
            backward(total)
            optimizer.step()
        violations = sum(b > a + 1e-6 for a, b in zip(values, values[1:]))
        assert violations <= 5
        assert values[-1] < values[0]


class TestGridSweep:
    """Test grid enumeration, ranking and the sweep runner."""

    def test_appendix_grid(self):
        """Test the width x depth grid has 36 cells with tied depths."""
        cells = GridSpec.appendix().cells()
        assert len(cells) == 36
        assert len({cell_id for cell_id, _ in cells}) == 36
        _, params = cells[-1]
        assert params == {
            "model.d_a": 256, "model.l_down_r": 3, "model.l_up_r": 3, "model.l_retain_e": 3, "model.l_down_e": 3,
        }

    def test_parse(self, tmp_path):
        """Test grids from the named preset, inline JSON and a file."""
        assert len(GridSpec.parse("appendix").cells()) == 36
        inline = GridSpec.parse('{"axes": {"model.d_a": [8, 16]}, "ablations": ["pairs:vv"]}')
        assert [cell_id for cell_id, _ in inline.cells()] == ["model.d_a=8", "model.d_a=16", "ablation=pairs:vv"]
        path = tmp_path / "grid.json"
        path.write_text('{"axes": {"train.lr": [0.01]}}')
        assert GridSpec.parse(str(path)).cells() == [("train.lr=0.01", {"train.lr": 0.01})]
        assert GridSpec().cells() == [("base", {})]

    def test_cell_config(self, toy_run_config):
        """Test tied overrides and ablations produce valid configs."""
        config = cell_config(toy_run_config, {"model.l_down_r": 2, "model.l_up_r": 2})
        assert config.model.l_down_r == 2 and config.model.l_up_r == 2
        ablated = cell_config(toy_run_config, {"ablation": "loss:focal+smooth_l1+det_bce"})
        assert ablated.model.loss_terms == ["focal", "smooth_l1", "det_bce"]
        assert ablated.model.d_a == toy_run_config.model.d_a

    def test_rank_cells(self):
        """Test average ranks against a hand computation."""
        table = pd.DataFrame({
            "cell_id": ["a", "b", "c"],
            "m1": [0.9, 0.5, 0.5],
            "m2": [0.1, 0.3, 0.2],
        })
        ranked = rank_cells(table, ["m1", "m2"]).set_index("cell_id")
        # m1 ranks: a=1, b=c=2.5; m2 ranks: b=1, c=2, a=3
        assert ranked.loc["a", "avg_rank"] == 2.0
        assert ranked.loc["b", "avg_rank"] == 1.75
        assert ranked.loc["c", "avg_rank"] == 2.25
        assert ranked["best"].sum() == 1 and ranked.loc["b", "best"]

    def test_rank_cells_failed_last(self):
        """Test cells without metrics have no rank and sort last."""
        table = pd.DataFrame({"cell_id": ["x", "y"], "m1": [np.nan, 0.2]})
        ranked = rank_cells(table, ["m1"])
        assert ranked["cell_id"].tolist() == ["y", "x"]
        assert np.isnan(ranked.loc[1, "avg_rank"])

    def test_sweep_with_registry(self, tmp_path, toy_run_config, toy_dataset, val_dataset, caplog):
        """Test a two-cell sweep with one failing cell, then a resumed sweep skipping completed cells."""
        base = toy_run_config.with_overrides({"train.max_epochs": 1})
        grid = GridSpec(axes={"model.k": [3, 4]})
        db = Database(str(tmp_path / "sweeps.db"))
        db.initialize_schema()
        table = grid_sweep(base, grid, toy_dataset, val_dataset, str(tmp_path / "sweep"), db)
        assert len(table) == 2
        status = dict(zip(table["cell_id"], table["status"]))
        assert status == {"model.k=3": "completed", "model.k=4": "failed"}
        assert table.iloc[0]["cell_id"] == "model.k=3" and table.iloc[0]["best"]
        assert (tmp_path / "sweep" / "sweep.csv").exists()

        with caplog.at_level(logging.INFO, logger="src.training.sweep"):
            again = grid_sweep(base, grid, toy_dataset, val_dataset, str(tmp_path / "sweep"), db)
        assert "Cell model.k=3: skipped" in caplog.text
        assert again["criterion"].tolist()[0] == pytest.approx(table["criterion"].tolist()[0])
        db.close()

    def test_single_cell_matches_plain_training(self, tmp_path, toy_run_config, toy_dataset, val_dataset):
        """Test a one-cell sweep reports the criterion of a plain training run."""
        base = toy_run_config.with_overrides({"train.max_epochs": 1})
        table = grid_sweep(base, GridSpec(), toy_dataset, val_dataset, str(tmp_path / "sweep"))
        plain = Trainer(base.model, base.train, base.eval, str(tmp_path / "plain")).train(toy_dataset, val_dataset)
        assert table.iloc[0]["cell_id"] == "base"
        assert table.iloc[0]["criterion"] == plain.best_criterion


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
