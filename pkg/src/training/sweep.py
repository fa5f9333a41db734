"""
Hyperparameter grid sweep ranked by average rank over the checkpoint-criterion metrics.
"""
import hashlib
import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from src.data.dataset import Dataset
from src.db import Database
from src.errors import ConfigError
from src.models import ModelConfig, RunConfig, SweepCellResult
from .trainer import Trainer

logger = logging.getLogger(__name__)

TIE = "+"
BASE_CELL = "base"
SWEEP_TABLE = "sweep.csv"


class GridSpec(BaseModel):
    """Cartesian grid over dotted config keys plus named ablations.

    An axis key may tie several keys with ``+`` (``model.l_down_r+model.l_up_r``);
    every tied key takes the same value.
    """
    axes: Dict[str, List[Any]] = Field(default_factory=dict)
    ablations: List[str] = Field(default_factory=list)

    @field_validator("axes")
    @classmethod
    def non_empty_axes(cls, value: Dict[str, List[Any]]) -> Dict[str, List[Any]]:
        for key, values in value.items():
            if not values:
                raise ValueError(f"grid axis {key} has no values")
        return value

    @classmethod
    def appendix(cls) -> "GridSpec":
        """Model width x tied reconstructor depth x tied encoder depth: 36 cells."""
        return cls(axes={
            "model.d_a": [32, 64, 128, 256],
            "model.l_down_r+model.l_up_r": [1, 2, 3],
            "model.l_retain_e+model.l_down_e": [1, 2, 3],
        })

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``appendix``, a JSON object, or a path to a JSON file."""
        if text == "appendix":
            return cls.appendix()
        try:
            raw = Path(text).read_text() if Path(text).is_file() else text
            return cls(**json.loads(raw))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc

    def cells(self) -> List[Tuple[str, Dict[str, Any]]]:
        """(cell id, dotted overrides) per grid point, then one cell per ablation."""
        keys = list(self.axes)
        cells = []
        for values in itertools.product(*(self.axes[k] for k in keys)):
            overrides = {}
            for axis, value in zip(keys, values):
                for key in axis.split(TIE):
                    overrides[key] = value
            cell_id = ",".join(f"{axis}={value}" for axis, value in zip(keys, values)) or BASE_CELL
            cells.append((cell_id, overrides))
        for name in self.ablations:
            cells.append((f"ablation={name}", {"ablation": name}))
        return cells


def cell_config(base: RunConfig, params: Dict[str, Any]) -> RunConfig:
    overrides = dict(params)
    ablation = overrides.pop("ablation", None)
    config = base.with_overrides(overrides)
    if ablation is not None:
        model = ModelConfig.ablation(ablation, config.model)
        config = config.with_overrides({"model": model.model_dump()})
    return config


def sweep_identifier(base: RunConfig, grid: GridSpec) -> str:
    payload = json.dumps(
        {"base": base.model_dump(mode="json"), "grid": grid.model_dump(mode="json")}, sort_keys=True
    )
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


def rank_cells(table: pd.DataFrame, metric_keys: Sequence[str]) -> pd.DataFrame:
    """Add per-metric ranks (1 = best, ties averaged), their mean and a ``best`` flag.

    Cells without metrics get no rank and are sorted last.
    """
    ranked = table.copy()
    ranks = ranked[list(metric_keys)].rank(ascending=False, method="average")
    for key in metric_keys:
        ranked[f"rank_{key}"] = ranks[key]
    ranked["avg_rank"] = ranks.mean(axis=1, skipna=False)
    ranked = ranked.sort_values(["avg_rank", "cell_id"], na_position="last", kind="mergesort")
    ranked["best"] = False
    if ranked["avg_rank"].notna().any():
        ranked.loc[ranked["avg_rank"].idxmin(), "best"] = True
    return ranked.reset_index(drop=True)


def run_cell(
    config: RunConfig, train_set: Dataset, val_set: Dataset, out_dir: Path, cell_id: str, params: Dict[str, Any]
) -> SweepCellResult:
    trainer = Trainer(config.model, config.train, config.eval, str(out_dir))
    result = trainer.train(train_set, val_set)
    if not result.success:
        return SweepCellResult(cell_id=cell_id, params=params, status="failed", error=result.error)
    return SweepCellResult(
        cell_id=cell_id,
        params=params,
        status="completed",
        criterion=result.best_criterion,
        metrics=result.best_metrics,
    )


def grid_sweep(
    base: RunConfig,
    grid: GridSpec,
    train_set: Dataset,
    val_set: Dataset,
    out_dir: str,
    db: Optional[Database] = None,
) -> pd.DataFrame:
    """Train and validate every cell, then rank the cells.

    A failing cell is recorded as failed and the sweep continues. With a registry,
    cells already completed under the same sweep id are not re-run.

    Returns:
        Ranked table, also written to ``out_dir/sweep.csv``
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep_id = sweep_identifier(base, grid)
    done = db.completed_cells(sweep_id) if db is not None else {}
    cells = grid.cells()
    logger.info("Sweep %s: %d cells, %d already completed", sweep_id, len(cells), len(done))

    results: List[SweepCellResult] = []
    for index, (cell_id, params) in enumerate(cells):
        if cell_id in done:
            logger.info("Cell %s: skipped (completed, criterion %.4f)", cell_id, done[cell_id].criterion or np.nan)
            results.append(done[cell_id])
            continue
        try:
            config = cell_config(base, params)
            result = run_cell(config, train_set, val_set, out / f"cell_{index:03d}", cell_id, params)
        except Exception as exc:
            logger.warning("Cell %s failed: %s", cell_id, exc)
            result = SweepCellResult(cell_id=cell_id, params=params, status="failed", error=str(exc))
        else:
            logger.info("Cell %s: %s, criterion %s", cell_id, result.status, result.criterion)
        if db is not None:
            db.record_cell(sweep_id, result)
        results.append(result)

    keys = base.train.criterion_keys()
    rows = []
    for result in results:
        row = {"cell_id": result.cell_id, "status": result.status, "criterion": result.criterion, "error": result.error}
        row.update({key: result.metrics.get(key, np.nan) for key in keys})
        rows.append(row)
    table = rank_cells(pd.DataFrame(rows, columns=["cell_id", "status", "criterion", "error", *keys]), keys)
    table.to_csv(out / SWEEP_TABLE, index=False)
    best = table[table["best"]]
    if len(best):
        logger.info("Best cell %s (average rank %.2f)", best.iloc[0]["cell_id"], best.iloc[0]["avg_rank"])
    return table
