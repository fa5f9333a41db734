"""
Whole-video scoring: chunk the valid segments, localize per chunk, merge, aggregate.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.data.targets import collate
from src.data.types import FeaturePair, FrameAnnotation
from src.errors import ContractViolation
from src.models import EvalConfig, PredictionRecord, ScoreRecord, SegmentPrediction, ValiditySpec
from src.network import ForgeryLocalizer
from src.postprocess import predict_segments, soft_nms, video_score
from .aggregation import psi_m, psi_s
from .validity import ValidSegments, ValidityRecord, chunk_plan, talking_mask, valid_segments

logger = logging.getLogger(__name__)


@dataclass
class VideoScore:
    video_id: str
    score: float
    mode: str
    predictions: List[SegmentPrediction] = field(default_factory=list)
    beta: ValidSegments = field(default_factory=ValidSegments)
    duration: float = 0.0
    elapsed: float = 0.0

    def score_record(self) -> ScoreRecord:
        return ScoreRecord(video_id=self.video_id, score=self.score, n_segments=len(self.predictions), mode=self.mode)

    def prediction_record(self) -> PredictionRecord:
        return PredictionRecord(
            video_id=self.video_id,
            duration=self.duration,
            segments=[p.as_tuple() for p in self.predictions],
            valid_segments=list(self.beta),
        )


def aggregate(predictions: List[SegmentPrediction], beta: ValidSegments, mode: str, theta: float) -> float:
    if mode == "video":
        return video_score(predictions)
    if mode == "psi_m":
        return psi_m(predictions, theta, beta)
    if mode == "psi_s":
        return psi_s(predictions)
    raise ContractViolation(f"unknown score mode {mode!r}")


class WildScorer:
    """Applies a trained localizer to long, unannotated videos."""

    def __init__(
        self,
        model: ForgeryLocalizer,
        validity: Optional[ValiditySpec] = None,
        eval_config: Optional[EvalConfig] = None,
        chunking: bool = True,
    ):
        self.model = model
        self.validity = validity or ValiditySpec()
        self.eval_config = eval_config or EvalConfig()
        self.chunking = chunking

    def valid_segments(self, features: FeaturePair, record: ValidityRecord) -> ValidSegments:
        presence = record.presence_mask()
        if presence.shape[0] != features.t:
            raise ContractViolation(
                f"{features.video_id}: presence mask has {presence.shape[0]} frames, features have {features.t}"
            )
        talk = talking_mask(features.x_v, self.validity.talk_threshold)
        return valid_segments(presence, talk, features.fps, self.validity)

    def windows(self, beta: ValidSegments) -> List[Tuple[float, float]]:
        if self.chunking:
            return chunk_plan(beta, self.validity.chunk_s, self.validity.min_segment_s)
        return list(beta)

    def localize_window(self, features: FeaturePair, start: float, end: float) -> List[SegmentPrediction]:
        """Post-SoftNMS predictions of one window, in video time."""
        first = int(round(start * features.fps))
        last = min(int(round(end * features.fps)), features.t)
        window = features.window(first, last)
        target_t = max(self.eval_config.max_len, window.t)
        annotation = FrameAnnotation(
            p=np.zeros(window.t), b=np.zeros((window.t, 2)), mask=np.ones(window.t), duration=window.duration
        )
        _, pyramid = self.model.forward(collate([(window, annotation)], target_t))
        local = predict_segments(pyramid.sample(0), window.fps, window.duration, self.eval_config)
        offset = first / features.fps
        return [p.shifted(offset) for p in local]

    def score(self, features: FeaturePair, record: ValidityRecord, mode: Optional[str] = None,
              theta: Optional[float] = None) -> VideoScore:
        mode = mode or self.eval_config.mode
        theta = self.eval_config.theta if theta is None else theta
        if features.d != self.model.config.d:
            raise ContractViolation(
                f"{features.video_id}: feature dim d={features.d} does not match model d={self.model.config.d}"
            )
        started = time.perf_counter()
        beta = self.valid_segments(features, record)
        windows = self.windows(beta)
        predictions: List[SegmentPrediction] = []
        for start, end in windows:
            predictions.extend(self.localize_window(features, start, end))
        if len(windows) > 1:
            predictions = soft_nms(predictions, self.eval_config.sigma_nms, self.eval_config.min_score)
        score = aggregate(predictions, beta, mode, theta)
        elapsed = time.perf_counter() - started
        logger.info(
            "Scored %s: %s=%.4f, %d windows, %d segments, time ratio %.3f",
            features.video_id, mode, score, len(windows), len(predictions), elapsed / max(features.duration, 1e-9),
        )
        return VideoScore(
            video_id=features.video_id,
            score=score,
            mode=mode,
            predictions=predictions,
            beta=beta,
            duration=features.duration,
            elapsed=elapsed,
        )
