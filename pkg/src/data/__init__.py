"""Data module initialization."""
from .types import FeaturePair, FrameAnnotation, Batch
from .targets import (
    build_frame_targets,
    pad_to_length,
    collate,
    frame_centers,
    frame_runs,
    runs_to_segments,
)
from .synthetic import SyntheticGenerator, generate_sample
from .formats import (
    read_features,
    write_features,
    read_annotation,
    write_annotation,
    read_manifest,
    write_manifest,
    read_jsonl,
    write_jsonl,
)
from .dataset import Dataset, generate_dataset, split_assignment

__all__ = [
    'FeaturePair',
    'FrameAnnotation',
    'Batch',
    'build_frame_targets',
    'pad_to_length',
    'collate',
    'frame_centers',
    'frame_runs',
    'runs_to_segments',
    'SyntheticGenerator',
    'generate_sample',
    'read_features',
    'write_features',
    'read_annotation',
    'write_annotation',
    'read_manifest',
    'write_manifest',
    'read_jsonl',
    'write_jsonl',
    'Dataset',
    'generate_dataset',
    'split_assignment',
]
