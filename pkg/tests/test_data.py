"""
Tests for synthetic generation, frame targets, padding and the on-disk formats.
"""
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.data import (
    Dataset,
    FeaturePair,
    SyntheticGenerator,
    build_frame_targets,
    collate,
    frame_runs,
    generate_dataset,
    generate_sample,
    pad_to_length,
    read_annotation,
    read_features,
    read_jsonl,
    read_manifest,
    runs_to_segments,
    split_assignment,
    write_features,
    write_jsonl,
)
from src.errors import ContractViolation, FormatError
from src.models import AnnotationRecord, RunConfig, ScoreRecord, SyntheticConfig

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestFrameTargets:
    """Test rasterizing ground-truth segments onto frames."""

    def test_empty(self):
        """Test no segments gives all-zero targets."""
        annotation = build_frame_targets([], 250, 25.0, 10.0)
        assert annotation.p.sum() == 0
        assert annotation.mask.sum() == 250

    def test_full_length(self):
        """Test one full-length segment marks every frame with the same boundaries."""
        annotation = build_frame_targets([(0.0, 10.0)], 250, 25.0, 10.0)
        assert annotation.p.sum() == 250
        assert np.all(annotation.b == [0.0, 10.0])

    def test_frame_centers(self):
        """Test segment (2, 4) at 25 fps sets frames 50..99."""
        annotation = build_frame_targets([(2.0, 4.0)], 250, 25.0, 10.0)
        assert np.flatnonzero(annotation.p).tolist() == list(range(50, 100))
        assert annotation.segments() == [(2.0, 4.0)]

    def test_overlap_rejected(self):
        """Test overlapping or out-of-range segments are contract violations."""
        with pytest.raises(ContractViolation):
            build_frame_targets([(1.0, 3.0), (2.0, 4.0)], 250, 25.0, 10.0)
        with pytest.raises(ContractViolation):
            build_frame_targets([(9.0, 11.0)], 250, 25.0, 10.0)

    def test_runs_recover_segments(self, rng):
        """Test maximal runs of p give back the segments to within one frame."""
        for _ in range(30):
            a, b = sorted(rng.uniform(0.0, 10.0, 2))
            if b - a < 0.2:
                continue
            annotation = build_frame_targets([(a, b)], 250, 25.0, 10.0)
            (start, end), = runs_to_segments(annotation.p, 25.0)
            assert abs(start - a) <= 1 / 25.0 and abs(end - b) <= 1 / 25.0

    def test_frame_runs(self):
        """Test half-open run extraction."""
        assert frame_runs(np.array([0, 1, 1, 0, 1])) == [(1, 3), (4, 5)]
        assert frame_runs(np.zeros(3)) == []


class TestPadding:
    """Test padding to the model's sequence length."""

    def pair(self, t, d=4):
        rng = np.random.default_rng(t)
        features = FeaturePair(x_v=rng.normal(size=(t, d)), x_a=rng.normal(size=(t, d)), fps=25.0)
        annotation = build_frame_targets([(0.2, 0.6)], t, 25.0, t / 25.0)
        return features, annotation

    def test_pad_short(self):
        """Test t=100 padded to 512 is zero with mask zero past frame 100."""
        features, annotation = self.pair(100)
        padded, target = pad_to_length(features, annotation, 512)
        assert padded.t == 512 and padded.valid_len == 100
        assert np.all(padded.x_v[100:] == 0) and np.all(padded.x_a[100:] == 0)
        assert target.mask[:100].sum() == 100 and target.mask[100:].sum() == 0
        assert np.array_equal(padded.x_v[:100], features.x_v)

    def test_full_length_unchanged(self):
        """Test t=512 is returned unchanged with a full mask."""
        features, annotation = self.pair(512)
        padded, target = pad_to_length(features, annotation, 512)
        assert np.array_equal(padded.x_v, features.x_v)
        assert target.mask.sum() == 512

    def test_too_long(self):
        """Test a sequence longer than the target is rejected."""
        features, annotation = self.pair(600)
        with pytest.raises(ContractViolation):
            pad_to_length(features, annotation, 512)

    def test_collate(self):
        """Test stacking samples of different lengths."""
        batch = collate([self.pair(20), self.pair(32)], 32)
        assert batch.x_v.shape == (2, 32, 4)
        assert batch.valid_lens.tolist() == [20, 32]
        assert batch.ground_truth == [[(0.2, 0.6)], [(0.2, 0.6)]]
        assert batch.labels().tolist() == [1, 1]


class TestSyntheticGenerator:
    """Test the correlated-latent generator."""

    def test_real_sample(self):
        """Test a real sample has no positives and no segments."""
        config = SyntheticConfig(n_samples=1, t=64, d=4, latent_dim=2, real_fraction=1.0, fake_duration_s=(0.3, 0.8))
        features, annotation, record = generate_sample(config, 0)
        assert annotation.p.sum() == 0
        assert record.segments == [] and record.label == 0
        assert features.x_v.shape == (64, 4)

    def test_noise_free_rank(self):
        """Test noise-free real streams are linear images of one low-rank latent."""
        config = SyntheticConfig(
            n_samples=1, t=128, d=8, latent_dim=2, noise_sigma=0.0, real_fraction=1.0,
        )
        features, _, _ = generate_sample(config, 5)
        singular = np.linalg.svd(np.hstack([features.x_v, features.x_a]), compute_uv=False)
        assert np.all(singular[2:] < 1e-4 * singular[0])

    def test_fake_segments(self):
        """Test fake samples carry non-overlapping segments within the video."""
        config = SyntheticConfig(n_samples=1, t=128, d=8, latent_dim=2, real_fraction=0.0)
        for index in range(10):
            _, annotation, record = generate_sample(config, index)
            assert record.label == 1
            assert all(0.0 <= s < e <= config.duration for s, e in record.segments)
            assert annotation.p.sum() > 0

    def test_deterministic(self):
        """Test a sample depends only on (config seed, index)."""
        config = SyntheticConfig(n_samples=4, t=64, d=4, latent_dim=2, fake_duration_s=(0.3, 0.8), seed=11)
        first = SyntheticGenerator(config).generate_sample(3)
        second = generate_sample(config, 3)
        assert np.array_equal(first[0].x_v, second[0].x_v)
        assert np.array_equal(first[0].x_a, second[0].x_a)
        assert first[2] == second[2]
        other = generate_sample(config.model_copy(update={"seed": 12}), 3)
        assert not np.array_equal(first[0].x_v, other[0].x_v)

    def test_fake_frames_break_cross_modal_prediction(self):
        """Test a linear audio-to-visual predictor fit on real frames does far worse on fake frames."""
        config = SyntheticConfig(n_samples=1, t=128, d=8, latent_dim=2, noise_sigma=0.05, seed=7)
        generator = SyntheticGenerator(config)
        real_a, real_v, fake_a, fake_v = [], [], [], []
        for index in range(80):
            features, annotation, _ = generator.generate_sample(index)
            fake = annotation.p > 0
            real_a.append(features.x_a[~fake])
            real_v.append(features.x_v[~fake])
            fake_a.append(features.x_a[fake])
            fake_v.append(features.x_v[fake])
        x_a, x_v = np.vstack(real_a), np.vstack(real_v)
        weights, *_ = np.linalg.lstsq(x_a, x_v, rcond=None)
        real_mse = np.mean((x_a @ weights - x_v) ** 2)
        fa, fv = np.vstack(fake_a), np.vstack(fake_v)
        fake_mse = np.mean((fa @ weights - fv) ** 2)
        assert fake_mse > 3.0 * real_mse

    def test_infeasible_placement(self):
        """Test placement gives up after repeated rejections."""
        config = SyntheticConfig(
            n_samples=1, t=50, d=4, latent_dim=2, real_fraction=0.0,
            n_fake_min=2, n_fake_max=2, fake_duration_s=(1.0, 1.0),
        )
        with pytest.raises(ContractViolation):
            generate_sample(config, 0)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_localization_config_places_every_sample(self, seed):
        """Test every sample of the 2800-sample localization config gets separated segments."""
        run = RunConfig.from_file(str(CONFIG_DIR / "synthetic_localization.json"))
        config = run.synthetic.model_copy(update={"seed": seed})
        generator = SyntheticGenerator(config)
        gap = 2.0 / config.fps
        for index in range(config.n_samples):
            segments = generator.generate_sample(index)[2].segments
            assert all(0.0 <= s < e <= config.duration for s, e in segments)
            assert all(b[0] - a[1] >= gap - 1e-9 for a, b in zip(segments, segments[1:]))

    def test_config_validation(self):
        """Test infeasible configurations are rejected."""
        with pytest.raises(ValueError):
            SyntheticConfig(d=2, latent_dim=4)
        with pytest.raises(ValueError):
            SyntheticConfig(t=32, fake_duration_s=(0.8, 2.4))


class TestFeatureFiles:
    """Test the binary feature file format."""

    def features(self):
        rng = np.random.default_rng(0)
        x_v = rng.normal(size=(16, 4)).astype(np.float32).astype(np.float64)
        x_a = rng.normal(size=(16, 4)).astype(np.float32).astype(np.float64)
        return FeaturePair(x_v=x_v, x_a=x_a, fps=25.0, video_id="clip")

    def test_round_trip(self, tmp_path):
        """Test write-then-read reproduces the arrays exactly."""
        path = tmp_path / "clip.avrf"
        original = self.features()
        write_features(str(path), original)
        loaded = read_features(str(path))
        assert np.array_equal(loaded.x_v, original.x_v)
        assert np.array_equal(loaded.x_a, original.x_a)
        assert loaded.fps == 25.0 and loaded.video_id == "clip"
        assert path.stat().st_size == 20 + 2 * 16 * 4 * 4

    def test_truncated(self, tmp_path):
        """Test a truncated payload names the missing byte count."""
        path = tmp_path / "clip.avrf"
        write_features(str(path), self.features())
        path.write_bytes(path.read_bytes()[:-12])
        with pytest.raises(FormatError) as info:
            read_features(str(path))
        assert info.value.missing == 12
        assert "missing 12 bytes" in str(info.value)

    def test_bad_magic_and_version(self, tmp_path):
        """Test corrupted magic and unsupported versions."""
        path = tmp_path / "clip.avrf"
        write_features(str(path), self.features())
        data = bytearray(path.read_bytes())
        path.write_bytes(b"XXXX" + bytes(data[4:]))
        with pytest.raises(FormatError, match="magic"):
            read_features(str(path))
        data[4] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            read_features(str(path))

    def test_trailing_bytes(self, tmp_path):
        """Test extra bytes after the payload are rejected."""
        path = tmp_path / "clip.avrf"
        write_features(str(path), self.features())
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(FormatError, match="trailing"):
            read_features(str(path))


class TestDatasetFiles:
    """Test dataset export, manifests and record files."""

    def test_split_assignment(self):
        """Test 100 samples split 70/15/15."""
        labels = split_assignment(100, (0.7, 0.15, 0.15), 0)
        assert pd.Series(labels).value_counts().to_dict() == {"train": 70, "val": 15, "test": 15}
        assert split_assignment(100, (0.7, 0.15, 0.15), 0) == labels

    def test_generate_and_load(self, tmp_path, toy_synthetic_config):
        """Test exporting a dataset and loading each split back through the manifest."""
        manifest = generate_dataset(toy_synthetic_config, str(tmp_path))
        assert len(manifest) == 12
        loaded = read_manifest(str(tmp_path / "manifest.csv"))
        total = 0
        for split in ("train", "val", "test"):
            dataset = Dataset.from_manifest(loaded, split)
            total += len(dataset)
            for features, annotation, record in dataset.samples:
                index = int(record.video_id.split("_")[1])
                expected, _, expected_record = generate_sample(toy_synthetic_config, index)
                assert np.array_equal(features.x_v, expected.x_v)
                assert record == expected_record
                assert annotation.t == features.t
        assert total == 12

    def test_generation_reproducible(self, tmp_path, toy_synthetic_config):
        """Test identical configs write byte-identical files."""
        generate_dataset(toy_synthetic_config, str(tmp_path / "a"))
        generate_dataset(toy_synthetic_config, str(tmp_path / "b"))
        for path in sorted((tmp_path / "a").rglob("*.*")):
            twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
            assert path.read_bytes() == twin.read_bytes()

    def test_bad_manifest(self, tmp_path):
        """Test a manifest without the required columns."""
        path = tmp_path / "manifest.csv"
        path.write_text("feature_path,split\nx.avrf,train\n")
        with pytest.raises(FormatError):
            read_manifest(str(path))

    def test_annotation_errors(self, tmp_path):
        """Test a malformed annotation file raises FormatError."""
        path = tmp_path / "bad.json"
        path.write_text('{"video_id": "x", "duration": 1.0, "fps": 25.0, "segments": [[0.5, 0.2]]}')
        with pytest.raises(FormatError):
            read_annotation(str(path))

    def test_jsonl(self, tmp_path):
        """Test JSON-lines records and a malformed line."""
        path = tmp_path / "scores.jsonl"
        records = [ScoreRecord(video_id="a", score=0.5, n_segments=2, mode="psi_m")]
        write_jsonl(str(path), records)
        assert read_jsonl(str(path), ScoreRecord) == records
        path.write_text(path.read_text() + "{broken\n")
        with pytest.raises(FormatError, match="line 2"):
            read_jsonl(str(path), ScoreRecord)

    def test_batches_shuffle(self, toy_dataset):
        """Test seeded shuffling visits every sample once and is reproducible."""
        def order(seed):
            return [vid for batch in toy_dataset.batches(3, 32, seed) for vid in batch.video_ids]

        assert sorted(order((0, 1))) == sorted(order(None))
        assert order((0, 1)) == order((0, 1))
        assert order((0, 1)) != order((0, 2))

    def test_annotation_record_validation(self):
        """Test overlapping ground truth is rejected."""
        with pytest.raises(ValueError):
            AnnotationRecord(video_id="x", duration=10.0, fps=25.0, segments=[(0, 2), (1, 3)])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
