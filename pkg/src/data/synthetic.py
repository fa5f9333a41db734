"""
Synthetic paired-feature generator.
Both modalities are noisy linear images of one smooth latent trajectory; manipulated
segments regenerate one modality from an independent trajectory.
"""
import logging
from typing import List, Tuple

import numpy as np
import pandas as pd

from src.errors import ContractViolation
from src.models import AnnotationRecord, SyntheticConfig
from .targets import build_frame_targets, frame_centers
from .types import FeaturePair, FrameAnnotation

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 100
# Stream tag separating the dataset-level projection draw from per-sample draws
_PROJECTION_STREAM = 2 ** 31 - 1


class SyntheticGenerator:
    """Generate samples as a pure function of (config, sample index)."""

    def __init__(self, config: SyntheticConfig):
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, _PROJECTION_STREAM]))
        self.w_v = self._full_rank_map(rng)
        self.w_a = self._full_rank_map(rng)

    def _full_rank_map(self, rng: np.random.Generator) -> np.ndarray:
        """latent_dim x d map with orthonormal rows scaled to preserve latent norms."""
        gaussian = rng.standard_normal((self.config.d, self.config.latent_dim))
        q, _ = np.linalg.qr(gaussian)
        return q.T.copy()

    def latent_trajectory(self, rng: np.random.Generator) -> np.ndarray:
        """Gaussian random walk smoothed by a centered moving average."""
        steps = rng.normal(0.0, self.config.walk_sigma, (self.config.t, self.config.latent_dim))
        walk = pd.DataFrame(np.cumsum(steps, axis=0))
        smoothed = walk.rolling(window=self.config.smooth_window, center=True, min_periods=1).mean()
        return smoothed.to_numpy()

    def _place_segments(self, rng: np.random.Generator, count: int) -> List[Tuple[float, float]]:
        """Non-overlapping segments at least two frames apart.

        Lengths are drawn first; the leftover time is then split at ``count`` sorted
        uniform points, so every draw of feasible lengths yields a valid placement.
        """
        cfg = self.config
        if count == 0:
            return []
        duration = cfg.duration
        gap = 2.0 / cfg.fps
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            lengths = rng.uniform(*cfg.fake_duration_s, size=count)
            slack = duration - lengths.sum() - gap * (count - 1)
            if slack < 0.0:
                continue
            offsets = np.sort(rng.uniform(0.0, slack, size=count))
            starts = offsets + np.concatenate([[0.0], np.cumsum(lengths[:-1] + gap)])
            ends = np.minimum(starts + lengths, duration)
            return [(float(s), float(e)) for s, e in zip(starts, ends)]
        raise ContractViolation(
            f"could not place {count} fake segments in {duration:.2f}s "
            f"after {MAX_PLACEMENT_ATTEMPTS} length draws"
        )

    def _blend_weights(self, n_frames: int) -> np.ndarray:
        """Linear cross-fade ramps at both boundaries of an n-frame segment."""
        ramp = self.config.crossfade_frames + 1
        index = np.arange(n_frames)
        return np.minimum(1.0, np.minimum((index + 1) / ramp, (n_frames - index) / ramp))

    def generate_sample(self, index: int) -> Tuple[FeaturePair, FrameAnnotation, AnnotationRecord]:
        """Draw sample ``index``; its randomness derives from (dataset seed, index) only."""
        cfg = self.config
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
        video_id = f"sample_{index:06d}"

        z = self.latent_trajectory(rng)
        x_v = z @ self.w_v + rng.normal(0.0, cfg.noise_sigma, (cfg.t, cfg.d))
        x_a = z @ self.w_a + rng.normal(0.0, cfg.noise_sigma, (cfg.t, cfg.d))

        n_fake = 0
        if rng.random() >= cfg.real_fraction:
            n_fake = int(rng.integers(cfg.n_fake_min, cfg.n_fake_max + 1))
        segments = self._place_segments(rng, n_fake)

        centers = frame_centers(cfg.t, cfg.fps)
        for start, end in segments:
            frames = np.flatnonzero((centers >= start) & (centers < end))
            if frames.size == 0:
                continue
            modality = cfg.manipulated_modality
            if modality == "either":
                modality = "audio" if rng.random() < 0.5 else "visual"
            fake_z = self.latent_trajectory(rng)[: frames.size]
            fake_z = fake_z - fake_z[0] + z[frames[0]]
            projection = self.w_a if modality == "audio" else self.w_v
            fake = fake_z @ projection + rng.normal(0.0, cfg.noise_sigma, (frames.size, cfg.d))
            alpha = self._blend_weights(frames.size)[:, None]
            target = x_a if modality == "audio" else x_v
            target[frames] = (1.0 - alpha) * target[frames] + alpha * fake

        # Round through float32 so the sample survives the feature file format unchanged
        x_v = x_v.astype(np.float32).astype(np.float64)
        x_a = x_a.astype(np.float32).astype(np.float64)

        features = FeaturePair(x_v=x_v, x_a=x_a, fps=cfg.fps, video_id=video_id)
        annotation = build_frame_targets(segments, cfg.t, cfg.fps, cfg.duration)
        record = AnnotationRecord(
            video_id=video_id, duration=cfg.duration, fps=cfg.fps, segments=segments
        )
        return features, annotation, record

    def generate(self, count: int, offset: int = 0):
        """Yield ``count`` consecutive samples starting at index ``offset``."""
        for index in range(offset, offset + count):
            yield self.generate_sample(index)


def generate_sample(config: SyntheticConfig, seed: int) -> Tuple[FeaturePair, FrameAnnotation, AnnotationRecord]:
    """Single sample of the dataset defined by ``config``, drawn from sample seed ``seed``."""
    return SyntheticGenerator(config).generate_sample(seed)
