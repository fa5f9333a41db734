"""
Dataset assembly: synthetic dataset export, manifest-backed loading and seeded batching.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src import config as defaults
from src.errors import ContractViolation
from src.models import AnnotationRecord, SyntheticConfig
from .formats import read_annotation, read_features, write_annotation, write_features, write_manifest
from .synthetic import SyntheticGenerator
from .targets import build_frame_targets, collate
from .types import Batch, FeaturePair, FrameAnnotation

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
Sample = Tuple[FeaturePair, FrameAnnotation, AnnotationRecord]


@dataclass
class Dataset:
    """An ordered collection of (features, frame targets, annotation) samples."""
    samples: List[Sample] = field(default_factory=list)
    name: str = ""

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> Sample:
        return self.samples[index]

    @property
    def n_fake(self) -> int:
        return sum(record.label for _, _, record in self.samples)

    @classmethod
    def from_manifest(cls, manifest: pd.DataFrame, split: str) -> "Dataset":
        rows = manifest[manifest["split"] == split]
        samples = []
        for row in rows.itertuples(index=False):
            record = read_annotation(row.annotation_path)
            features = read_features(row.feature_path, video_id=record.video_id)
            if abs(features.fps - record.fps) > 1e-6:
                raise ContractViolation(
                    f"{record.video_id}: feature fps {features.fps} != annotation fps {record.fps}"
                )
            annotation = build_frame_targets(record.segments, features.t, record.fps, record.duration)
            samples.append((features, annotation, record))
        logger.info("Loaded %d %s samples (%d fake)", len(samples), split, sum(r.label for _, _, r in samples))
        return cls(samples=samples, name=split)

    @classmethod
    def synthetic(cls, config: SyntheticConfig, indices: Sequence[int], name: str = "") -> "Dataset":
        generator = SyntheticGenerator(config)
        return cls(samples=[generator.generate_sample(i) for i in indices], name=name)

    def batches(
        self,
        batch_size: int,
        target_t: int = defaults.MAX_SEQUENCE_LENGTH,
        shuffle_seed: Optional[Sequence[int]] = None,
    ) -> Iterator[Batch]:
        """Yield padded batches; ``shuffle_seed`` (e.g. (seed, epoch)) permutes the order reproducibly."""
        order = np.arange(len(self.samples))
        if shuffle_seed is not None:
            order = np.random.default_rng(np.random.SeedSequence(list(shuffle_seed))).permutation(order)
        for start in range(0, len(order), batch_size):
            chosen = [self.samples[i] for i in order[start:start + batch_size]]
            yield collate(
                [(f, a) for f, a, _ in chosen],
                target_t,
                ground_truth=[list(r.segments) for _, _, r in chosen],
            )


def split_assignment(n: int, ratios: Tuple[float, float, float], seed: int) -> List[str]:
    """Seeded split label per sample index; counts are rounded, test takes the remainder."""
    n_train = int(round(n * ratios[0]))
    n_val = min(int(round(n * ratios[1])), n - n_train)
    labels = np.array(["test"] * n, dtype=object)
    order = np.random.default_rng(np.random.SeedSequence([seed, n])).permutation(n)
    labels[order[:n_train]] = "train"
    labels[order[n_train:n_train + n_val]] = "val"
    return list(labels)


def generate_dataset(config: SyntheticConfig, out_dir: str) -> pd.DataFrame:
    """Write ``config.n_samples`` feature/annotation files and a manifest under ``out_dir``.

    Returns:
        The manifest table, with paths relative to ``out_dir``
    """
    root = Path(out_dir)
    generator = SyntheticGenerator(config)
    splits = split_assignment(config.n_samples, config.split_ratios, config.seed)
    rows = []
    for index, split in enumerate(splits):
        features, _, record = generator.generate_sample(index)
        feature_rel = Path("features") / f"{record.video_id}.avrf"
        annotation_rel = Path("annotations") / f"{record.video_id}.json"
        write_features(str(root / feature_rel), features)
        write_annotation(str(root / annotation_rel), record)
        rows.append({"feature_path": str(feature_rel), "annotation_path": str(annotation_rel), "split": split})
    manifest = pd.DataFrame(rows)
    write_manifest(str(root / "manifest.csv"), manifest)
    counts = manifest["split"].value_counts().to_dict()
    logger.info("Generated %d samples in %s: %s", len(manifest), out_dir, counts)
    return manifest
