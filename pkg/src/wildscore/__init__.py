"""Wild scoring module initialization."""
from .intervals import merge_intervals, measure, intersect, rle_encode, rle_decode
from .validity import (
    ValidSegments,
    ValidityRecord,
    read_validity,
    write_validity,
    talking_mask,
    valid_segments,
    chunk_plan,
)
from .aggregation import psi_m, psi_s
from .scoring import WildScorer, VideoScore, aggregate

__all__ = [
    'merge_intervals',
    'measure',
    'intersect',
    'rle_encode',
    'rle_decode',
    'ValidSegments',
    'ValidityRecord',
    'read_validity',
    'write_validity',
    'talking_mask',
    'valid_segments',
    'chunk_plan',
    'psi_m',
    'psi_s',
    'WildScorer',
    'VideoScore',
    'aggregate',
]
