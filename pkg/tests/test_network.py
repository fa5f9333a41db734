"""
Tests for the reconstruction networks, discrepancy encoder, heads and checkpoints.
"""
import math

import numpy as np
import pytest

from src.autodiff import Tensor, backward
from src.data import FeaturePair
from src.errors import ContractViolation, FormatError
from src.models import ModelConfig
from src.network import (
    ForgeryLocalizer,
    ReconstructionSet,
    Reconstructor,
    compute_discrepancies,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from src.objectives import compute_losses


def random_pair(rng, t, d=4, fps=25.0):
    return FeaturePair(x_v=rng.normal(size=(t, d)), x_a=rng.normal(size=(t, d)), fps=fps, video_id="clip")


def zero_weights(model):
    for param in model.parameters():
        param.data = np.zeros_like(param.data)


class TestReconstructor:
    """Test the per-pair reconstruction network."""

    @pytest.mark.parametrize("t", [7, 16, 512])
    def test_output_shape_matches_input(self, t, rng):
        """Test reconstruction keeps the (t, d) shape, including non-multiple lengths."""
        recon = Reconstructor(ModelConfig.toy(l_down_r=3, l_up_r=3), rng)
        out = recon(Tensor(rng.normal(size=(t, 4))))
        assert out.shape == (t, 4)

    def test_zero_weights_give_zero_output(self, rng):
        """Test all-zero parameters reconstruct zeros."""
        recon = Reconstructor(ModelConfig.toy(), rng)
        zero_weights(recon)
        out = recon(Tensor(rng.normal(size=(2, 10, 4))))
        assert np.array_equal(out.data, np.zeros((2, 10, 4)))

    def test_layer_count_for_smaller_benchmark(self, rng):
        """Test the two-pre, three-down, three-up, two-post instance has 10 layers."""
        config = ModelConfig.lavdf(d=4, d_a=8, k=3)
        assert Reconstructor(config, rng).layer_count() == 10

    def test_feature_dim_mismatch(self, rng):
        """Test a source with the wrong d is a contract violation."""
        recon = Reconstructor(ModelConfig.toy(), rng)
        with pytest.raises(ContractViolation):
            recon(Tensor(np.zeros((8, 5))))

    def test_padded_frames_stay_zero(self, rng):
        """Test frames past valid_len are zero in the reconstruction."""
        recon = Reconstructor(ModelConfig.toy(), rng)
        x = rng.normal(size=(1, 12, 4))
        x[:, 9:] = 0.0
        out = recon(Tensor(x), np.array([9]))
        assert np.array_equal(out.data[0, 9:], np.zeros((3, 4)))


class TestDiscrepancies:
    """Test discrepancy computation."""

    def test_perfect_reconstruction_is_zero(self, rng):
        """Test exact reconstructions give an all-zero, 3d-wide discrepancy."""
        x_v, x_a = Tensor(rng.normal(size=(5, 4))), Tensor(rng.normal(size=(5, 4)))
        recon = ReconstructionSet({"av": x_v, "aa": x_a, "vv": x_v})
        out = compute_discrepancies(x_v, x_a, recon, ["av", "aa", "vv"])
        assert out.shape == (5, 12)
        assert np.array_equal(out.data, np.zeros((5, 12)))

    def test_product_variant(self):
        """Test the product op multiplies estimate and target."""
        x = Tensor(np.full((2, 4), 3.0))
        recon = ReconstructionSet({"vv": Tensor(np.full((2, 4), 2.0))})
        out = compute_discrepancies(x, x, recon, ["vv"], op="product")
        assert np.array_equal(out.data, np.full((2, 4), 6.0))

    def test_canonical_order(self, rng):
        """Test channels follow the av, va, aa, vv order whatever the pair_set order."""
        x_v, x_a = Tensor(np.zeros((3, 1))), Tensor(np.zeros((3, 1)))
        recon = ReconstructionSet({p: Tensor(np.full((3, 1), float(i))) for i, p in enumerate(["vv", "av", "aa"])})
        out = compute_discrepancies(x_v, x_a, recon, ["vv", "aa", "av"])
        assert np.array_equal(out.data[0], [1.0, 2.0, 0.0])

    def test_missing_pair(self, rng):
        """Test a missing reconstruction is a contract violation."""
        x = Tensor(np.zeros((3, 2)))
        with pytest.raises(ContractViolation):
            compute_discrepancies(x, x, ReconstructionSet({"av": x}), ["av", "vv"])


class TestForgeryLocalizer:
    """Test the assembled model."""

    def test_default_parameter_count(self):
        """Test the default configuration's parameter count is stable."""
        assert ForgeryLocalizer(ModelConfig()).parameter_count() == 6_059_315

    def test_level_lengths(self):
        """Test two retain and two down levels at t=16 give lengths 16, 16, 8, 4."""
        model = ForgeryLocalizer(ModelConfig.toy(l_retain_e=2, l_down_e=2))
        assert model.level_lengths(16) == [16, 16, 8, 4]

    def test_larger_benchmark_has_two_levels(self):
        """Test the single retain, single down instance has two pyramid levels."""
        config = ModelConfig.avdf1m(d=4, d_a=8, k=3)
        assert config.levels == 2
        assert len(ForgeryLocalizer(config).level_lengths(32)) == 2

    def test_head_shapes(self, rng):
        """Test each level yields t_level logits and t_level x 2 offsets."""
        model = ForgeryLocalizer(ModelConfig.toy())
        _, pyramid = model.forward(random_pair(rng, 20))
        assert [level.length for level in pyramid.levels] == [20, 10]
        for level in pyramid.levels:
            assert level.logits.shape == (1, level.length)
            assert level.offsets.shape == (1, level.length, 2)
            assert np.all(level.offsets.data >= 0)

    def test_zero_weights_heads(self, rng):
        """Test zero parameters give logits 0 and offsets ln 2."""
        model = ForgeryLocalizer(ModelConfig.toy())
        zero_weights(model)
        _, pyramid = model.forward(random_pair(rng, 16))
        for level in pyramid.levels:
            assert np.array_equal(level.logits.data, np.zeros_like(level.logits.data))
            assert np.allclose(level.offsets.data, math.log(2.0))

    def test_anchor_times(self, rng):
        """Test anchors sit at the center of each position's stride span."""
        model = ForgeryLocalizer(ModelConfig.toy())
        _, pyramid = model.forward(random_pair(rng, 8, fps=4.0))
        assert np.allclose(pyramid.levels[1].anchor_times(4.0), [0.25, 0.75, 1.25, 1.75])

    def test_forward_equals_manual_composition(self, rng):
        """Test forward is exactly reconstruct, discrepancies, encode and heads."""
        model = ForgeryLocalizer(ModelConfig.toy())
        pair = random_pair(rng, 24)
        _, pyramid = model.forward(pair)

        x_v, x_a = Tensor(pair.x_v[None]), Tensor(pair.x_a[None])
        valid = np.array([24.0])
        recon = model.reconstruct_all(x_v, x_a, valid)
        disc = compute_discrepancies(x_v, x_a, recon, model.config.pair_set)
        manual = model.predict_heads(model.encode(disc, valid), np.array([25.0]), np.array([pair.duration]))
        for got, want in zip(pyramid.levels, manual.levels):
            assert np.array_equal(got.logits.data, want.logits.data)
            assert np.array_equal(got.offsets.data, want.offsets.data)

    def test_deterministic(self, rng):
        """Test equal configs give equal weights and bitwise equal outputs."""
        pair = random_pair(rng, 16)
        first = ForgeryLocalizer(ModelConfig.toy()).forward(pair)[1]
        second = ForgeryLocalizer(ModelConfig.toy()).forward(pair)[1]
        for a, b in zip(first.levels, second.levels):
            assert np.array_equal(a.logits.data, b.logits.data)

    def test_visual_only_pairs_ignore_audio(self, rng):
        """Test a vv-only model's outputs do not depend on the audio stream."""
        model = ForgeryLocalizer(ModelConfig.toy(pair_set=["vv"]))
        pair = random_pair(rng, 16)
        other = FeaturePair(x_v=pair.x_v, x_a=rng.normal(size=(16, 4)), fps=25.0)
        first, second = model.forward(pair)[1], model.forward(other)[1]
        for a, b in zip(first.levels, second.levels):
            assert np.array_equal(a.logits.data, b.logits.data)
            assert np.array_equal(a.offsets.data, b.offsets.data)

    def test_circular_shift_moves_logits(self, rng):
        """Test shifting inputs by an even number of frames shifts interior stride-1 logits."""
        model = ForgeryLocalizer(ModelConfig.toy())
        t, shift, margin = 96, 8, 32
        pair = random_pair(rng, t)
        rolled = FeaturePair(x_v=np.roll(pair.x_v, shift, axis=0), x_a=np.roll(pair.x_a, shift, axis=0), fps=25.0)
        base = model.forward(pair)[1].levels[0].logits.data[0]
        moved = model.forward(rolled)[1].levels[0].logits.data[0]
        interior = np.arange(shift + margin, t - margin)
        assert np.allclose(moved[interior], base[interior - shift], atol=1e-9)

    def test_video_logits_ignore_padding(self, rng):
        """Test the video logit is the maximum over valid positions only."""
        model = ForgeryLocalizer(ModelConfig.toy())
        pair = random_pair(rng, 16)
        padded = FeaturePair(x_v=pair.x_v, x_a=pair.x_a, fps=25.0, valid_len=10)
        _, pyramid = model.forward(padded)
        expected = max(
            level.logits.data[0][level.mask[0] > 0].max() for level in pyramid.levels
        )
        assert pyramid.video_logits().data[0] == pytest.approx(expected)

    def test_every_parameter_receives_gradient(self, toy_dataset):
        """Test one backward pass over a batch reaches every parameter."""
        model = ForgeryLocalizer(ModelConfig.toy())
        batch = next(toy_dataset.batches(8, 32))
        recon, pyramid = model.forward(batch)
        backward(compute_losses(recon, pyramid, batch, model.config).total)
        silent = [p.name for p in model.parameters() if not np.any(p.grad != 0)]
        assert silent == []

    def test_flops_scale_with_length(self):
        """Test the FLOP estimate is even and linear in t for lengths divisible by the strides."""
        model = ForgeryLocalizer(ModelConfig.toy())
        flops = model.estimate_flops(64)
        assert flops > 0 and flops % 2 == 0
        assert model.estimate_flops(128) == 2 * flops

    def test_float32_parameters(self, rng):
        """Test single-precision models run forward in float32."""
        model = ForgeryLocalizer(ModelConfig.toy(), dtype=np.float32)
        assert all(p.dtype == np.float32 for p in model.parameters())
        _, pyramid = model.forward(random_pair(rng, 16))
        assert pyramid.levels[0].logits.dtype == np.float32


class TestCheckpoint:
    """Test the binary checkpoint format."""

    def test_round_trip(self, tmp_path):
        """Test save/load restores config and float32-rounded parameters."""
        model = ForgeryLocalizer(ModelConfig.toy(init_seed=5))
        path = tmp_path / "model.avrm"
        save_checkpoint(str(path), model)
        loaded = load_checkpoint(str(path))
        assert loaded.config == model.config
        for a, b in zip(model.parameters(), loaded.parameters()):
            assert np.array_equal(b.data, a.data.astype(np.float32).astype(np.float64))

    def test_bad_magic(self, tmp_path):
        """Test a wrong magic is a format error."""
        path = tmp_path / "bad.avrm"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(FormatError):
            read_checkpoint(str(path))

    def test_truncated_file(self, tmp_path):
        """Test truncation reports the missing byte count."""
        path = tmp_path / "model.avrm"
        save_checkpoint(str(path), ForgeryLocalizer(ModelConfig.toy()))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FormatError) as info:
            read_checkpoint(str(path))
        assert info.value.missing == 4

    def test_byte_identical_saves(self, tmp_path):
        """Test saving the same model twice writes identical bytes."""
        model = ForgeryLocalizer(ModelConfig.toy())
        save_checkpoint(str(tmp_path / "a.avrm"), model)
        save_checkpoint(str(tmp_path / "b.avrm"), model)
        assert (tmp_path / "a.avrm").read_bytes() == (tmp_path / "b.avrm").read_bytes()
