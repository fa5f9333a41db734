"""
Discrepancy encoder: stride-1 retain layers, stride-2 down layers, and a top-down feature pyramid.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from src.autodiff import Tensor, ops
from src.models import ModelConfig
from .layers import Conv1d, ConvBlock, Module, scaled_mask

SMOOTH_KERNEL = 3


@dataclass
class PyramidFeatures:
    """Per-level fused features with their strides and validity masks."""
    features: List[Tensor]
    strides: List[int]
    masks: List[np.ndarray]


class DiscrepancyEncoder(Module):
    def __init__(self, config: ModelConfig, in_channels: int, rng: np.random.Generator):
        d_a, k, q = config.d_a, config.k, config.pyramid_dim
        eps = config.layer_norm_eps
        self.strides = config.level_strides()
        self.layers: List[ConvBlock] = []
        channels = in_channels
        for i in range(len(self.strides)):
            step = 1 if i < config.l_retain_e else 2
            self.layers.append(ConvBlock(Conv1d(channels, d_a, k, step, rng), eps))
            channels = d_a
        self.lateral: List[ConvBlock] = [
            ConvBlock(Conv1d(d_a, q, 1, 1, rng), eps, normalize=False) for _ in self.strides
        ]
        self.smooth: List[ConvBlock] = [
            ConvBlock(Conv1d(q, q, SMOOTH_KERNEL, 1, rng), eps, normalize=False) for _ in self.strides
        ]

    def __call__(self, x: Tensor, valid_lens: np.ndarray) -> PyramidFeatures:
        """Encode (B, t, C) discrepancies into one feature map per level."""
        levels, masks = [], []
        for block, stride in zip(self.layers, self.strides):
            mask = scaled_mask(valid_lens, block.layer.output_length(x.shape[1]), stride)
            x = block(x, mask)
            levels.append(x)
            masks.append(mask)

        laterals = [lat(f, m) for lat, f, m in zip(self.lateral, levels, masks)]
        merged = list(laterals)
        for i in range(len(laterals) - 2, -1, -1):
            factor = self.strides[i + 1] // self.strides[i]
            coarse = ops.fit_length(ops.upsample_nearest(merged[i + 1], factor), laterals[i].shape[1])
            merged[i] = laterals[i] + coarse
        fused = [smooth(f, m) for smooth, f, m in zip(self.smooth, merged, masks)]
        return PyramidFeatures(features=fused, strides=list(self.strides), masks=masks)

    def level_lengths(self, t: int) -> List[int]:
        lengths, length = [], t
        for block in self.layers:
            length = block.layer.output_length(length)
            lengths.append(length)
        return lengths

    def multiply_adds(self, t: int) -> int:
        total, length = 0, t
        for block, lateral, smooth in zip(self.layers, self.lateral, self.smooth):
            total += block.layer.multiply_adds(length)
            length = block.layer.output_length(length)
            total += lateral.layer.multiply_adds(length) + smooth.layer.multiply_adds(length)
        return total
