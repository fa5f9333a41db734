"""Training module initialization."""
from .optim import Adam, AdamState, adam_step, PlateauScheduler, EarlyStopping
from .evaluate import predict_dataset, evaluate_model
from .trainer import Trainer
from .sweep import GridSpec, grid_sweep, rank_cells, cell_config

__all__ = [
    'Adam',
    'AdamState',
    'adam_step',
    'PlateauScheduler',
    'EarlyStopping',
    'predict_dataset',
    'evaluate_model',
    'Trainer',
    'GridSpec',
    'grid_sweep',
    'rank_cells',
    'cell_config',
]
