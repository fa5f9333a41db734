"""
Classification and boundary-regression heads, shared across pyramid levels.
"""
from typing import List

import numpy as np

from src.autodiff import Tensor, ops
from src.models import ModelConfig
from .layers import Conv1d, ConvBlock, Module

HEAD_KERNEL = 3
HEAD_DEPTH = 2


class PredictionHead(Module):
    """Two LN+ReLU convs at d_a, then a linear conv to ``out_channels``."""

    def __init__(self, config: ModelConfig, out_channels: int, rng: np.random.Generator):
        eps = config.layer_norm_eps
        channels = config.pyramid_dim
        self.hidden: List[ConvBlock] = []
        for _ in range(HEAD_DEPTH):
            self.hidden.append(ConvBlock(Conv1d(channels, config.d_a, HEAD_KERNEL, 1, rng), eps))
            channels = config.d_a
        self.output = ConvBlock(Conv1d(channels, out_channels, HEAD_KERNEL, 1, rng), eps, normalize=False)

    def __call__(self, f: Tensor, mask: np.ndarray) -> Tensor:
        for block in self.hidden:
            f = block(f, mask)
        return self.output(f, mask)

    def multiply_adds(self, length: int) -> int:
        return sum(block.layer.multiply_adds(length) for block in self.hidden + [self.output])


class ClassificationHead(PredictionHead):
    """Per-position raw manipulation logit."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, 1, rng)

    def __call__(self, f: Tensor, mask: np.ndarray) -> Tensor:
        out = super().__call__(f, mask)
        return ops.reshape(out, out.shape[:-1])


class RegressionHead(PredictionHead):
    """Per-position (left, right) distances in seconds, softplus-positive."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, 2, rng)

    def __call__(self, f: Tensor, mask: np.ndarray) -> Tensor:
        return ops.softplus(super().__call__(f, mask))
