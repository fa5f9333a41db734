"""Models module initialization."""
from .configs import (
    ModelConfig,
    TrainConfig,
    SyntheticConfig,
    ValiditySpec,
    EvalConfig,
    PathsConfig,
    RunConfig,
    PAIR_ORDER,
    parse_override,
)
from .records import (
    SegmentPrediction,
    AnnotationRecord,
    EvalRecord,
    ScoreRecord,
    PredictionRecord,
    HistoryRow,
    TrainResult,
    SweepCellResult,
)

__all__ = [
    'ModelConfig',
    'TrainConfig',
    'SyntheticConfig',
    'ValiditySpec',
    'EvalConfig',
    'PathsConfig',
    'RunConfig',
    'PAIR_ORDER',
    'parse_override',
    'SegmentPrediction',
    'AnnotationRecord',
    'EvalRecord',
    'ScoreRecord',
    'PredictionRecord',
    'HistoryRow',
    'TrainResult',
    'SweepCellResult',
]
