"""Postprocessing module initialization."""
from .segments import decode_segments, soft_nms, video_score, video_target, predict_segments

__all__ = [
    'decode_segments',
    'soft_nms',
    'video_score',
    'predict_segments',
    'video_target',
]
