"""
Frame-target rasterization, padding and run extraction.
Frame tau covers time (tau + 0.5) / fps at its center.
"""
from typing import List, Sequence, Tuple

import numpy as np

from src import config
from src.errors import ContractViolation
from .types import Batch, FeaturePair, FrameAnnotation


def frame_centers(t: int, fps: float) -> np.ndarray:
    return (np.arange(t) + 0.5) / fps


def build_frame_targets(
    segments: Sequence[Tuple[float, float]],
    t: int,
    fps: float,
    duration: float,
) -> FrameAnnotation:
    """Rasterize ground-truth segments onto frames.

    Args:
        segments: disjoint (start, end) seconds within [0, duration]
        t: number of frames
        fps: frames per second
        duration: video duration in seconds

    Returns:
        FrameAnnotation with p[tau] = 1 iff the frame center lies in [s, e)
    """
    ordered = sorted((float(s), float(e)) for s, e in segments)
    for s, e in ordered:
        if not 0.0 <= s < e <= duration + 1e-9:
            raise ContractViolation(f"segment ({s}, {e}) outside [0, {duration}] or degenerate")
    for (_, e1), (s2, _) in zip(ordered, ordered[1:]):
        if s2 < e1:
            raise ContractViolation(f"overlapping segments ending {e1} and starting {s2}")

    centers = frame_centers(t, fps)
    p = np.zeros(t)
    b = np.zeros((t, 2))
    for s, e in ordered:
        inside = (centers >= s) & (centers < e)
        p[inside] = 1.0
        b[inside] = (s, e)
    return FrameAnnotation(p=p, b=b, mask=np.ones(t), duration=float(duration))


def frame_runs(flags: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal runs of non-zero flags as half-open (start, stop) frame index pairs."""
    active = np.concatenate([[0], (np.asarray(flags) > 0).astype(np.int8), [0]])
    edges = np.flatnonzero(np.diff(active))
    return [(int(a), int(b)) for a, b in zip(edges[0::2], edges[1::2])]


def runs_to_segments(flags: np.ndarray, fps: float) -> List[Tuple[float, float]]:
    """Convert maximal runs of flagged frames to second intervals [start/fps, stop/fps)."""
    return [(a / fps, b / fps) for a, b in frame_runs(flags)]


def pad_to_length(
    features: FeaturePair,
    annotation: FrameAnnotation,
    target_t: int = config.MAX_SEQUENCE_LENGTH,
) -> Tuple[FeaturePair, FrameAnnotation]:
    """Zero-pad features and targets to ``target_t`` frames; the mask marks original frames."""
    t = features.t
    if t > target_t:
        raise ContractViolation(f"sequence of {t} frames exceeds target length {target_t}")
    if annotation.t != t:
        raise ContractViolation(f"annotation has {annotation.t} frames, features have {t}")
    extra = target_t - t

    def pad(values: np.ndarray) -> np.ndarray:
        widths = [(0, extra)] + [(0, 0)] * (values.ndim - 1)
        return np.pad(values, widths)

    padded = FeaturePair(
        x_v=pad(features.x_v),
        x_a=pad(features.x_a),
        fps=features.fps,
        valid_len=features.valid_len,
        video_id=features.video_id,
    )
    mask = pad(annotation.mask * (np.arange(t) < features.valid_len))
    target = FrameAnnotation(
        p=pad(annotation.p),
        b=pad(annotation.b),
        mask=mask,
        duration=annotation.duration,
    )
    return padded, target


def collate(
    samples: Sequence[Tuple[FeaturePair, FrameAnnotation]],
    target_t: int = config.MAX_SEQUENCE_LENGTH,
    ground_truth: Sequence[List[Tuple[float, float]]] = (),
) -> Batch:
    """Pad every sample to ``target_t`` and stack them."""
    padded = [pad_to_length(f, a, target_t) for f, a in samples]
    return Batch(
        x_v=np.stack([f.x_v for f, _ in padded]),
        x_a=np.stack([f.x_a for f, _ in padded]),
        mask=np.stack([a.mask for _, a in padded]),
        p=np.stack([a.p for _, a in padded]),
        b=np.stack([a.b for _, a in padded]),
        fps=np.array([f.fps for f, _ in padded], dtype=np.float64),
        durations=np.array([a.duration for _, a in padded], dtype=np.float64),
        video_ids=[f.video_id for f, _ in padded],
        ground_truth=[list(g) for g in ground_truth] or [a.segments() for _, a in padded],
    )
