"""
Decoding head outputs into scored segments, Gaussian SoftNMS, and the video-level score.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src import config
from src.data.types import FrameAnnotation
from src.errors import ContractViolation
from src.evaluation.metrics import segment_iou
from src.models import EvalConfig, SegmentPrediction

LevelArrays = Tuple[np.ndarray, np.ndarray, np.ndarray, int]


def _sigmoid(values: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -values))


def decode_segments(
    levels: Sequence[LevelArrays],
    fps: float,
    duration: float,
    pre_nms_top_n: int = config.PRE_NMS_TOP_N,
    min_score: float = config.SOFT_NMS_MIN_SCORE,
) -> List[SegmentPrediction]:
    """Turn per-level (logits, offsets, mask, stride) into segments sorted by confidence.

    Each valid position yields (anchor - left, anchor + right, sigmoid(logit)) clamped to
    [0, duration]; degenerate or low-confidence segments are dropped and the best
    ``pre_nms_top_n`` kept.
    """
    starts, ends, scores = [], [], []
    for logits, offsets, mask, stride in levels:
        valid = np.asarray(mask) > 0
        anchors = (np.arange(len(logits)) + 0.5) * stride / fps
        starts.append((anchors - offsets[:, 0])[valid])
        ends.append((anchors + offsets[:, 1])[valid])
        scores.append(_sigmoid(np.asarray(logits, dtype=np.float64))[valid])
    if not starts:
        return []
    s = np.clip(np.concatenate(starts), 0.0, duration)
    e = np.clip(np.concatenate(ends), 0.0, duration)
    rho = np.concatenate(scores)

    keep = (e > s) & (rho >= min_score)
    s, e, rho = s[keep], e[keep], rho[keep]
    order = np.argsort(-rho, kind="stable")[:pre_nms_top_n]
    return [SegmentPrediction(s=float(s[i]), e=float(e[i]), rho=float(rho[i])) for i in order]


def soft_nms(
    segments: Sequence[SegmentPrediction],
    sigma_nms: float = config.SOFT_NMS_SIGMA,
    min_score: float = config.SOFT_NMS_MIN_SCORE,
) -> List[SegmentPrediction]:
    """Gaussian SoftNMS: select the best, decay the rest by exp(-IoU^2 / sigma), repeat."""
    if sigma_nms <= 0:
        raise ContractViolation(f"sigma_nms must be positive, got {sigma_nms}")
    bounds = np.array([(seg.s, seg.e) for seg in segments], dtype=np.float64).reshape(-1, 2)
    scores = np.array([seg.rho for seg in segments], dtype=np.float64)
    alive = np.ones(len(scores), dtype=bool)
    selected: List[SegmentPrediction] = []
    while alive.any():
        candidates = np.flatnonzero(alive)
        best = candidates[int(np.argmax(scores[candidates]))]
        if scores[best] < min_score:
            break
        selected.append(SegmentPrediction(s=bounds[best, 0], e=bounds[best, 1], rho=scores[best]))
        alive[best] = False
        rest = np.flatnonzero(alive)
        if rest.size:
            ious = segment_iou(bounds[best], bounds[rest])
            scores[rest] *= np.exp(-(ious ** 2) / sigma_nms)
    return selected


def video_score(segments: Sequence[SegmentPrediction]) -> float:
    """Maximum confidence; 0 when nothing was detected."""
    return max((seg.rho for seg in segments), default=0.0)


def video_target(annotation: FrameAnnotation) -> int:
    """1 if any valid frame is manipulated, else 0."""
    return int(np.any((annotation.p > 0) & (annotation.mask > 0)))


def predict_segments(
    levels: Sequence[LevelArrays],
    fps: float,
    duration: float,
    eval_config: Optional[EvalConfig] = None,
) -> List[SegmentPrediction]:
    """Decode then suppress, with the thresholds of ``eval_config``."""
    eval_config = eval_config or EvalConfig()
    candidates = decode_segments(levels, fps, duration, eval_config.pre_nms_top_n, eval_config.min_score)
    return soft_nms(candidates, eval_config.sigma_nms, eval_config.min_score)
