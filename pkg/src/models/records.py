"""
Pydantic models for per-video records and run results.
"""
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Interval = Tuple[float, float]


class SegmentPrediction(BaseModel):
    """Scored temporal segment (s, e, rho) in seconds."""
    model_config = ConfigDict(frozen=True)

    s: float = Field(..., ge=0.0)
    e: float
    rho: float = Field(..., ge=0.0, le=1.0)

    @model_validator(mode="after")
    def ordered(self) -> "SegmentPrediction":
        if not self.e > self.s:
            raise ValueError(f"segment end {self.e} must exceed start {self.s}")
        return self

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.s, self.e, self.rho)

    def shifted(self, offset: float) -> "SegmentPrediction":
        return SegmentPrediction(s=self.s + offset, e=self.e + offset, rho=self.rho)


class AnnotationRecord(BaseModel):
    """Ground-truth manipulated intervals of one video."""
    video_id: str
    duration: float = Field(..., gt=0.0)
    fps: float = Field(..., gt=0.0)
    segments: List[Interval] = Field(default_factory=list)

    @field_validator("segments")
    @classmethod
    def sorted_disjoint(cls, value: List[Interval]) -> List[Interval]:
        ordered = sorted((float(s), float(e)) for s, e in value)
        for (s, e) in ordered:
            if not e > s:
                raise ValueError(f"degenerate segment ({s}, {e})")
        for (_, e1), (s2, _) in zip(ordered, ordered[1:]):
            if s2 < e1:
                raise ValueError("ground-truth segments overlap")
        return ordered

    @property
    def label(self) -> int:
        return int(bool(self.segments))


class EvalRecord(BaseModel):
    """Predictions and ground truth of one video, as consumed by the metrics."""
    video_id: str
    predictions: List[SegmentPrediction] = Field(default_factory=list)
    ground_truth: List[Interval] = Field(default_factory=list)
    video_score: float = 0.0
    video_label: Literal[0, 1] = 0


class ScoreRecord(BaseModel):
    """One line of a score file."""
    video_id: str
    score: float
    n_segments: int
    mode: Literal["psi_m", "psi_s", "video"]


class PredictionRecord(BaseModel):
    """Merged post-NMS predictions of one video together with its valid segments."""
    video_id: str
    duration: float
    segments: List[Tuple[float, float, float]] = Field(default_factory=list)
    valid_segments: List[Interval] = Field(default_factory=list)

    def predictions(self) -> List[SegmentPrediction]:
        return [SegmentPrediction(s=s, e=e, rho=rho) for s, e, rho in self.segments]


class HistoryRow(BaseModel):
    """Per-epoch training history row."""
    epoch: int
    loss: float
    loc: float
    rec: float
    det: float
    criterion: float
    lr: float
    improved: bool


class TrainResult(BaseModel):
    """Outcome of a training run."""
    success: bool = True
    best_epoch: int
    best_criterion: float
    epochs_run: int
    stopped_early: bool
    checkpoint_path: Optional[str] = None
    history: List[HistoryRow] = Field(default_factory=list)
    best_metrics: Dict[str, float] = Field(default_factory=dict)
    error: Optional[str] = None


class SweepCellResult(BaseModel):
    """Result of one grid cell."""
    cell_id: str
    params: Dict[str, Any]
    status: Literal["completed", "failed"]
    criterion: Optional[float] = None
    metrics: Dict[str, float] = Field(default_factory=dict)
    error: Optional[str] = None
