"""
Forgery localizer: per-pair reconstruction, discrepancy computation, pyramid encoder and heads.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.autodiff import Parameter, Tensor, as_tensor, ops
from src.data.types import Batch, FeaturePair
from src.errors import ContractViolation
from src.models import PAIR_ORDER, ModelConfig
from .encoder import DiscrepancyEncoder, PyramidFeatures
from .heads import ClassificationHead, RegressionHead
from .layers import Module
from .reconstruction import Reconstructor

logger = logging.getLogger(__name__)

# Added to logits of padded positions before taking a video-level maximum
_MASKED_LOGIT = -1e9


@dataclass
class ReconstructionSet:
    """One reconstructed target sequence per configured (source, target) pair."""
    outputs: Dict[str, Tensor] = field(default_factory=dict)

    def __getitem__(self, pair: str) -> Tensor:
        if pair not in self.outputs:
            raise ContractViolation(f"reconstruction for pair {pair!r} missing; have {sorted(self.outputs)}")
        return self.outputs[pair]

    def __contains__(self, pair: str) -> bool:
        return pair in self.outputs

    @property
    def pairs(self) -> List[str]:
        return [p for p in PAIR_ORDER if p in self.outputs]


@dataclass
class PyramidLevel:
    features: Tensor
    logits: Tensor
    offsets: Tensor
    stride: int
    mask: np.ndarray

    @property
    def length(self) -> int:
        return self.logits.shape[-1]

    def anchor_times(self, fps: float) -> np.ndarray:
        """Center time of each position's stride span, in seconds."""
        return (np.arange(self.length) + 0.5) * self.stride / fps


@dataclass
class PyramidOutput:
    """Head outputs per level, batched as (B, t_level[, 2])."""
    levels: List[PyramidLevel]
    fps: np.ndarray
    durations: np.ndarray

    @property
    def strides(self) -> List[int]:
        return [level.stride for level in self.levels]

    def video_logits(self) -> Tensor:
        """(B,) maximum logit over valid positions of every level."""
        logits = ops.concat([level.logits for level in self.levels], axis=-1)
        mask = np.concatenate([level.mask for level in self.levels], axis=-1)
        penalty = Tensor((1.0 - mask) * _MASKED_LOGIT)
        return ops.max(logits + penalty, axis=-1)

    def sample(self, index: int) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray, int]]:
        """(logits, offsets, mask, stride) per level for one batch element, as arrays."""
        return [
            (level.logits.data[index], level.offsets.data[index], level.mask[index], level.stride)
            for level in self.levels
        ]


def _source_target(pair: str, x_v: Tensor, x_a: Tensor) -> Tuple[Tensor, Tensor]:
    streams = {"a": x_a, "v": x_v}
    return streams[pair[0]], streams[pair[1]]


def compute_discrepancies(
    x_v: Tensor,
    x_a: Tensor,
    recon: ReconstructionSet,
    pair_set: List[str],
    op: str = "difference",
) -> Tensor:
    """Concatenate x_hat - x_target (or x_hat * x_target) over pairs in canonical order."""
    x_v, x_a = as_tensor(x_v), as_tensor(x_a)
    parts = []
    for pair in [p for p in PAIR_ORDER if p in pair_set]:
        estimate = recon[pair]
        _, target = _source_target(pair, x_v, x_a)
        if op == "difference":
            parts.append(estimate - target)
        elif op == "product":
            parts.append(estimate * target)
        else:
            raise ContractViolation(f"unknown discrepancy op {op!r}")
    return ops.concat(parts, axis=-1)


class ForgeryLocalizer(Module):
    """The full model. Parameters are declared in the order: reconstructors, encoder, heads."""

    def __init__(self, config: ModelConfig, dtype=np.float64):
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        self.reconstructors: Dict[str, Reconstructor] = {
            pair: Reconstructor(config, rng) for pair in config.pair_set
        }
        self.encoder = DiscrepancyEncoder(config, config.d * len(config.pair_set), rng)
        self.cls_head = ClassificationHead(config, rng)
        self.reg_head = RegressionHead(config, rng)
        self.assign_names()
        if dtype != np.float64:
            for param in self.parameters():
                param.data = param.data.astype(dtype)

    def reconstruct(self, source: Tensor, pair: str, valid_lens: Optional[np.ndarray] = None) -> Tensor:
        if pair not in self.reconstructors:
            raise ContractViolation(f"pair {pair!r} not in configured pair set {self.config.pair_set}")
        return self.reconstructors[pair](as_tensor(source), valid_lens)

    def reconstruct_all(self, x_v: Tensor, x_a: Tensor, valid_lens: Optional[np.ndarray] = None) -> ReconstructionSet:
        outputs = {}
        for pair in self.config.pair_set:
            source, _ = _source_target(pair, x_v, x_a)
            outputs[pair] = self.reconstruct(source, pair, valid_lens)
        return ReconstructionSet(outputs)

    def encode(self, x: Tensor, valid_lens: np.ndarray) -> PyramidFeatures:
        expected = self.config.d * len(self.config.pair_set)
        if x.shape[-1] != expected:
            raise ContractViolation(f"encoder expects {expected} channels, got {x.shape[-1]}")
        return self.encoder(x, valid_lens)

    def predict_heads(self, pyramid: PyramidFeatures, fps: np.ndarray, durations: np.ndarray) -> PyramidOutput:
        levels = [
            PyramidLevel(
                features=f,
                logits=self.cls_head(f, mask),
                offsets=self.reg_head(f, mask),
                stride=stride,
                mask=mask,
            )
            for f, stride, mask in zip(pyramid.features, pyramid.strides, pyramid.masks)
        ]
        return PyramidOutput(levels=levels, fps=fps, durations=durations)

    def forward(self, inputs: Union[Batch, FeaturePair]) -> Tuple[ReconstructionSet, PyramidOutput]:
        """Run a padded batch (or a single feature pair) through the network."""
        batch = _as_batch(inputs)
        valid_lens = batch.mask.sum(axis=1)
        if np.any(valid_lens < 1):
            raise ContractViolation("every sample needs valid_len >= 1")
        dtype = self.parameters()[0].dtype
        mask = batch.mask[..., None]
        x_v = Tensor((batch.x_v * mask).astype(dtype))
        x_a = Tensor((batch.x_a * mask).astype(dtype))
        if x_v.shape[-1] != self.config.d:
            raise ContractViolation(f"features have d={x_v.shape[-1]}, model expects d={self.config.d}")

        recon = self.reconstruct_all(x_v, x_a, valid_lens)
        discrepancies = compute_discrepancies(x_v, x_a, recon, self.config.pair_set, self.config.discrepancy_op)
        pyramid = self.encode(discrepancies, valid_lens)
        return recon, self.predict_heads(pyramid, batch.fps, batch.durations)

    __call__ = forward

    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def level_lengths(self, t: int) -> List[int]:
        return self.encoder.level_lengths(t)

    def estimate_flops(self, t: int) -> int:
        """Floating-point operations of the conv/deconv layers for one length-t sample (2 per multiply-add)."""
        mads = sum(r.multiply_adds(t) for r in self.reconstructors.values())
        mads += self.encoder.multiply_adds(t)
        for length in self.level_lengths(t):
            mads += self.cls_head.multiply_adds(length) + self.reg_head.multiply_adds(length)
        return 2 * mads

    def state_arrays(self) -> List[np.ndarray]:
        return [p.data for p in self.parameters()]

    def load_arrays(self, arrays: List[np.ndarray]) -> None:
        params: List[Parameter] = self.parameters()
        if len(arrays) != len(params):
            raise ContractViolation(f"expected {len(params)} parameter arrays, got {len(arrays)}")
        for param, array in zip(params, arrays):
            if param.shape != tuple(array.shape):
                raise ContractViolation(f"{param.name}: shape {array.shape} != {param.shape}")
            param.data = np.array(array, dtype=param.dtype)


def _as_batch(inputs: Union[Batch, FeaturePair]) -> Batch:
    if isinstance(inputs, Batch):
        return inputs
    mask = inputs.mask()
    return Batch(
        x_v=inputs.x_v[None],
        x_a=inputs.x_a[None],
        mask=mask[None],
        p=np.zeros((1, inputs.t)),
        b=np.zeros((1, inputs.t, 2)),
        fps=np.array([inputs.fps]),
        durations=np.array([inputs.duration]),
        video_ids=[inputs.video_id],
    )
