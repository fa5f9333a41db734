"""
Deterministic training loop: seeded shuffling, Adam, plateau schedule, early stopping,
best-criterion checkpoints and bit-exact resume from the last epoch.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.autodiff import backward
from src.data.dataset import Dataset
from src.data.formats import write_jsonl
from src.errors import ContractViolation, NonFiniteError
from src.evaluation import MetricsCalculator
from src.models import EvalConfig, EvalRecord, HistoryRow, ModelConfig, TrainConfig, TrainResult
from src.network import ForgeryLocalizer, save_checkpoint
from src.objectives import compute_losses
from .evaluate import evaluate_model
from .optim import Adam, EarlyStopping, PlateauScheduler

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.avrm"
LAST_CHECKPOINT = "last.avrm"
STATE_SUFFIX = ".state.npz"
HISTORY_FILE = "history.csv"
VAL_PREDICTIONS = "val_predictions.jsonl"


class Trainer:
    """Train one model configuration and keep the best validation checkpoint."""

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        eval_config: Optional[EvalConfig] = None,
        out_dir: str = ".",
    ):
        self.model_config = model_config
        self.train_config = train_config
        self.eval_config = eval_config or EvalConfig()
        self.out_dir = Path(out_dir)
        self.calculator = MetricsCalculator()
        dtype = np.float32 if train_config.dtype == "float32" else np.float64
        self.model = ForgeryLocalizer(model_config, dtype=dtype)
        tc = train_config
        self.optimizer = Adam(self.model.parameters(), tc.lr, tc.adam_beta1, tc.adam_beta2, tc.adam_eps)
        self.scheduler = PlateauScheduler(tc.plateau_factor, tc.plateau_patience, tc.improvement_threshold)
        self.stopper = EarlyStopping(tc.early_stop_patience, tc.improvement_threshold)
        self.history: List[HistoryRow] = []
        self.best_criterion = -np.inf
        self.best_epoch = -1
        self.best_metrics: Dict[str, float] = {}
        self.start_epoch = 0

    @property
    def best_path(self) -> Path:
        return self.out_dir / BEST_CHECKPOINT

    @property
    def last_path(self) -> Path:
        return self.out_dir / LAST_CHECKPOINT

    def train_epoch(self, dataset: Dataset, epoch: int) -> Dict[str, float]:
        """One pass over ``dataset`` in the (seed, epoch) order; returns sample-weighted mean losses."""
        tc = self.train_config
        sums = {"loss": 0.0, "loc": 0.0, "rec": 0.0, "det": 0.0}
        seen = 0
        for index, batch in enumerate(dataset.batches(tc.batch_size, self.eval_config.max_len, (tc.seed, epoch))):
            self.optimizer.zero_grad()
            recon, pyramid = self.model.forward(batch)
            report = compute_losses(recon, pyramid, batch, self.model_config)
            loss = report.total.item()
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss {loss} at epoch {epoch} batch {index}")
            backward(report.total)
            self.optimizer.step()
            for key in sums:
                sums[key] += report.as_dict()[key] * batch.size
            seen += batch.size
        return {key: value / max(seen, 1) for key, value in sums.items()}

    def validate(self, dataset: Dataset) -> Tuple[float, Dict[str, float], List[EvalRecord]]:
        """Criterion (weighted sum of the configured AP/AR entries), metric report and records."""
        if len(dataset) == 0:
            raise ContractViolation("validation set is empty")
        if dataset.n_fake == 0:
            logger.warning("Validation set has no fake videos; the criterion is undefined")
        records, metrics = evaluate_model(self.model, dataset, self.eval_config, self.train_config.batch_size, self.calculator)
        criterion = self.calculator.criterion(
            metrics, self.train_config.criterion_keys(), self.train_config.criterion_weights
        )
        return criterion, metrics, records

    def train(self, train_set: Dataset, val_set: Dataset, resume: bool = False) -> TrainResult:
        """Run epochs until max_epochs or early stopping.

        Returns:
            TrainResult pointing at the best checkpoint
        """
        train_ids = {r.video_id for _, _, r in train_set.samples}
        if train_ids & {r.video_id for _, _, r in val_set.samples}:
            raise ContractViolation("train and validation splits overlap")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if resume and self.state_path(self.last_path).exists():
            self.load_state(self.last_path)
            logger.info("Resuming at epoch %d (best %.4f at epoch %d)", self.start_epoch, self.best_criterion, self.best_epoch)

        tc = self.train_config
        for epoch in range(self.start_epoch, tc.max_epochs):
            if self.stopper.early_stop:
                break
            losses = self.train_epoch(train_set, epoch)
            criterion, metrics, records = self.validate(val_set)
            improved = bool(criterion > self.best_criterion + tc.improvement_threshold)
            if improved:
                self.best_criterion, self.best_epoch, self.best_metrics = criterion, epoch, metrics
                save_checkpoint(str(self.best_path), self.model)
                write_jsonl(str(self.out_dir / VAL_PREDICTIONS), records)
                logger.info("Epoch %d: new best criterion %.4f, checkpoint %s", epoch, criterion, self.best_path)

            self.history.append(HistoryRow(epoch=epoch, criterion=criterion, lr=self.optimizer.lr, improved=improved, **losses))
            logger.info(
                "Epoch %d: loss=%.5f loc=%.5f rec=%.5f det=%.5f criterion=%.4f lr=%.6g",
                epoch, losses["loss"], losses["loc"], losses["rec"], losses["det"], criterion, self.optimizer.lr,
            )
            self.optimizer.lr = self.scheduler.step(criterion, self.optimizer.lr)
            self.stopper(criterion)
            self.start_epoch = epoch + 1
            self.write_history()
            self.save_state(self.last_path)

        if self.best_epoch < 0:
            return TrainResult(
                success=False, best_epoch=-1, best_criterion=float("nan"), epochs_run=len(self.history),
                stopped_early=self.stopper.early_stop, history=self.history,
                error="validation criterion never became finite",
            )
        return TrainResult(
            best_epoch=self.best_epoch,
            best_criterion=self.best_criterion,
            epochs_run=len(self.history),
            stopped_early=self.stopper.early_stop,
            checkpoint_path=str(self.best_path),
            history=self.history,
            best_metrics=self.best_metrics,
        )

    def write_history(self) -> None:
        frame = pd.DataFrame([row.model_dump() for row in self.history])
        frame.to_csv(self.out_dir / HISTORY_FILE, index=False)

    @staticmethod
    def state_path(checkpoint: Path) -> Path:
        return checkpoint.with_name(checkpoint.name + STATE_SUFFIX)

    def save_state(self, checkpoint: Path) -> None:
        """Write the float32 checkpoint and a sidecar with everything needed to continue exactly."""
        save_checkpoint(str(checkpoint), self.model)
        arrays = {}
        for i, param in enumerate(self.optimizer.params):
            arrays[f"param_{i}"] = param.data
            arrays[f"m_{i}"] = self.optimizer.state.m[i]
            arrays[f"v_{i}"] = self.optimizer.state.v[i]
        counters = {
            "epoch": self.start_epoch,
            "adam_step": self.optimizer.state.step,
            "lr": self.optimizer.lr,
            "best_criterion": self.best_criterion,
            "best_epoch": self.best_epoch,
            "best_metrics": self.best_metrics,
            "plateau_best": self.scheduler.best,
            "plateau_bad": self.scheduler.num_bad_epochs,
            "stop_best": self.stopper.best,
            "stop_counter": self.stopper.counter,
            "stopped": self.stopper.early_stop,
            "history": [row.model_dump() for row in self.history],
        }
        arrays["counters"] = np.array(json.dumps(counters))
        np.savez(self.state_path(checkpoint), **arrays)

    def load_state(self, checkpoint: Path) -> None:
        with np.load(self.state_path(checkpoint), allow_pickle=False) as archive:
            counters = json.loads(str(archive["counters"]))
            n = len(self.optimizer.params)
            self.model.load_arrays([archive[f"param_{i}"] for i in range(n)])
            self.optimizer.state.m = [archive[f"m_{i}"].copy() for i in range(n)]
            self.optimizer.state.v = [archive[f"v_{i}"].copy() for i in range(n)]
        self.optimizer.state.step = counters["adam_step"]
        self.optimizer.lr = counters["lr"]
        self.start_epoch = counters["epoch"]
        self.best_criterion = counters["best_criterion"]
        self.best_epoch = counters["best_epoch"]
        self.best_metrics = counters["best_metrics"]
        self.scheduler.best = counters["plateau_best"]
        self.scheduler.num_bad_epochs = counters["plateau_bad"]
        self.stopper.best = counters["stop_best"]
        self.stopper.counter = counters["stop_counter"]
        self.stopper.early_stop = counters["stopped"]
        self.history = [HistoryRow(**row) for row in counters["history"]]
