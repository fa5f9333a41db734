"""
Valid-segment construction for in-the-wild videos: talking heuristic, presence mask, chunking.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src import config
from src.data.targets import runs_to_segments
from src.errors import FormatError
from src.models import ValiditySpec
from .intervals import Interval, measure, rle_decode, rle_encode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ValidSegments:
    """Disjoint, sorted second-intervals of a video where the model is applied."""
    beta: List[Interval] = field(default_factory=list)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.beta)

    def __len__(self) -> int:
        return len(self.beta)

    def measure(self) -> float:
        return measure(self.beta)


class ValidityRecord(BaseModel):
    """Validity file contents: presence mask stored as (value, run length) pairs."""
    video_id: str = ""
    fps: float = Field(..., gt=0.0)
    duration: float = Field(..., gt=0.0)
    presence: List[Tuple[int, int]] = Field(default_factory=list)

    def presence_mask(self) -> np.ndarray:
        return rle_decode(self.presence)

    @classmethod
    def from_mask(cls, mask: np.ndarray, fps: float, video_id: str = "") -> "ValidityRecord":
        return cls(video_id=video_id, fps=fps, duration=len(mask) / fps, presence=rle_encode(mask))


def write_validity(path: str, record: ValidityRecord) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(record.model_dump(mode="json"), indent=2, sort_keys=True))


def read_validity(path: str) -> ValidityRecord:
    try:
        return ValidityRecord.model_validate_json(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"cannot read validity file: {exc}", path=path) from exc
    except ValueError as exc:
        raise FormatError(f"invalid validity file: {exc}", path=path) from exc


def talking_mask(x_v: np.ndarray, threshold: float = config.TALK_THRESHOLD) -> np.ndarray:
    """1 where the visual representation moves by at least ``threshold`` since the previous frame."""
    x_v = np.asarray(x_v)
    t = x_v.shape[0]
    if t < 2:
        return np.zeros(t, dtype=np.int8)
    motion = np.linalg.norm(np.diff(x_v, axis=0), axis=1)
    mask = np.empty(t, dtype=np.int8)
    mask[1:] = motion >= threshold
    mask[0] = mask[1]
    return mask


def valid_segments(
    presence_mask: np.ndarray,
    talk_mask: np.ndarray,
    fps: float,
    spec: ValiditySpec,
) -> ValidSegments:
    """Runs where a subject is present and talking, at least ``spec.min_segment_s`` long."""
    presence_mask = np.asarray(presence_mask)
    talk_mask = np.asarray(talk_mask)
    if presence_mask.shape != talk_mask.shape:
        raise ValueError(f"mask lengths differ: {presence_mask.shape} vs {talk_mask.shape}")
    both = (presence_mask > 0) & (talk_mask > 0)
    runs = runs_to_segments(both, fps)
    # Tolerance keeps exact-length runs (e.g. 50 frames at 25 fps) above a 2 s minimum
    return ValidSegments([(s, e) for s, e in runs if e - s >= spec.min_segment_s - 1e-9])


def chunk_plan(
    beta: ValidSegments,
    chunk_s: float = config.CHUNK_SECONDS,
    min_segment_s: float = config.MIN_SEGMENT_SECONDS,
) -> List[Interval]:
    """Tile every valid segment with chunk_s windows; a short tail joins the window before it."""
    if chunk_s <= 0:
        raise ValueError(f"chunk_s must be positive, got {chunk_s}")
    windows: List[Interval] = []
    for start, end in beta:
        pieces: List[Interval] = []
        i = 0
        while start + i * chunk_s < end:
            pieces.append((start + i * chunk_s, min(start + (i + 1) * chunk_s, end)))
            i += 1
        if pieces and pieces[-1][1] - pieces[-1][0] < min_segment_s:
            tail = pieces.pop()
            if pieces:
                pieces[-1] = (pieces[-1][0], tail[1])
        windows.extend(pieces)
    return windows
