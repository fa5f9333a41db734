"""
Video-level aggregation of segment predictions: covered-fraction score and sweep-average score.
"""
import logging
from typing import Sequence

import numpy as np

from src.models import SegmentPrediction
from .intervals import intersect, measure
from .validity import ValidSegments

logger = logging.getLogger(__name__)


def psi_m(
    segments: Sequence[SegmentPrediction],
    theta: float,
    beta: ValidSegments,
) -> float:
    """Fraction of valid time covered by segments scoring above ``theta``."""
    total = beta.measure()
    if total <= 0:
        logger.warning("psi_m undefined: no valid segments")
        return float("nan")
    confident = [(seg.s, seg.e) for seg in segments if seg.rho > theta]
    return measure(intersect(confident, list(beta))) / total


def psi_s(segments: Sequence[SegmentPrediction]) -> float:
    """Integral over time of the mean score of active segments.

    Endpoints split the timeline into elementary pieces; each piece contributes its
    length times the average confidence of the segments covering it.
    """
    if not segments:
        return 0.0
    starts = np.array([seg.s for seg in segments])
    ends = np.array([seg.e for seg in segments])
    rho = np.array([seg.rho for seg in segments])
    events = np.unique(np.concatenate([starts, ends]))
    total = 0.0
    for left, right in zip(events[:-1], events[1:]):
        active = (starts <= left) & (ends >= right)
        count = int(active.sum())
        if count:
            total += rho[active].sum() / count * (right - left)
    return float(total)
