"""
In-memory containers for paired features, frame targets and padded batches.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.errors import ContractViolation


@dataclass
class FeaturePair:
    """Visual and audio representation sequences of one video, both (t, d)."""
    x_v: np.ndarray
    x_a: np.ndarray
    fps: float
    valid_len: Optional[int] = None
    video_id: str = ""

    def __post_init__(self):
        if self.x_v.ndim != 2 or self.x_v.shape != self.x_a.shape:
            raise ContractViolation(
                f"x_v and x_a must share a (t, d) shape, got {self.x_v.shape} and {self.x_a.shape}"
            )
        if self.valid_len is None:
            self.valid_len = self.x_v.shape[0]
        if not 0 <= self.valid_len <= self.x_v.shape[0]:
            raise ContractViolation(f"valid_len {self.valid_len} outside [0, {self.x_v.shape[0]}]")

    @property
    def t(self) -> int:
        return self.x_v.shape[0]

    @property
    def d(self) -> int:
        return self.x_v.shape[1]

    @property
    def duration(self) -> float:
        return self.valid_len / self.fps

    def mask(self) -> np.ndarray:
        return (np.arange(self.t) < self.valid_len).astype(np.float64)

    def window(self, start: int, stop: int, video_id: Optional[str] = None) -> "FeaturePair":
        """Frames [start, stop) as a standalone pair."""
        stop = min(stop, self.valid_len)
        return FeaturePair(
            x_v=self.x_v[start:stop].copy(),
            x_a=self.x_a[start:stop].copy(),
            fps=self.fps,
            video_id=video_id or self.video_id,
        )


@dataclass
class FrameAnnotation:
    """Per-frame manipulation flags p, segment boundaries b (seconds) and validity mask."""
    p: np.ndarray
    b: np.ndarray
    mask: np.ndarray
    duration: float

    @property
    def t(self) -> int:
        return self.p.shape[0]

    def segments(self) -> List[Tuple[float, float]]:
        """Distinct (start, end) boundaries of positive valid frames, in time order."""
        seen = []
        for tau in np.flatnonzero((self.p > 0) & (self.mask > 0)):
            bounds = (float(self.b[tau, 0]), float(self.b[tau, 1]))
            if not seen or seen[-1] != bounds:
                seen.append(bounds)
        return seen


@dataclass
class Batch:
    """Stack of padded samples sharing one sequence length."""
    x_v: np.ndarray
    x_a: np.ndarray
    mask: np.ndarray
    p: np.ndarray
    b: np.ndarray
    fps: np.ndarray
    durations: np.ndarray
    video_ids: List[str] = field(default_factory=list)
    ground_truth: List[List[Tuple[float, float]]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.x_v.shape[0]

    @property
    def t(self) -> int:
        return self.x_v.shape[1]

    @property
    def valid_lens(self) -> np.ndarray:
        return self.mask.sum(axis=1).astype(int)

    def labels(self) -> np.ndarray:
        return ((self.p * self.mask).max(axis=1) > 0).astype(int)
