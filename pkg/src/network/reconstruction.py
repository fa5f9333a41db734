"""
Per-pair reconstruction network: pre-projection, strided down block, deconv up block, post block.
"""
from typing import List, Optional

import numpy as np

from src.autodiff import Tensor, ops
from src.errors import ContractViolation
from src.models import ModelConfig
from .layers import Conv1d, ConvBlock, Deconv1d, Module, scaled_mask

PRE_POST_KERNEL = 3


class Reconstructor(Module):
    """Maps a source modality sequence (t, d) to a reconstruction of the target modality (t, d)."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        d, d_a, k = config.d, config.d_a, config.k
        eps = config.layer_norm_eps
        self.d = d
        self.pre: List[ConvBlock] = [
            ConvBlock(Conv1d(d if i == 0 else d_a, d_a, PRE_POST_KERNEL, 1, rng), eps)
            for i in range(config.l_pre_r)
        ]
        self.down: List[ConvBlock] = [
            ConvBlock(Conv1d(d_a, d_a, k, 2, rng), eps) for _ in range(config.l_down_r)
        ]
        self.up: List[ConvBlock] = [
            ConvBlock(Deconv1d(d_a, d_a, k, rng), eps) for _ in range(config.l_up_r)
        ]
        self.post: List[ConvBlock] = [
            ConvBlock(Conv1d(d_a, d_a, PRE_POST_KERNEL, 1, rng), eps)
            for _ in range(config.l_post_r - 1)
        ]
        # Targets are unconstrained reals: no LN/ReLU on the output layer
        self.output = ConvBlock(Conv1d(d_a, d, PRE_POST_KERNEL, 1, rng), eps, normalize=False)
        self.multiple = 2 ** config.l_down_r

    def blocks(self) -> List[ConvBlock]:
        return self.pre + self.down + self.up + self.post + [self.output]

    def padded_length(self, t: int) -> int:
        return -(-t // self.multiple) * self.multiple

    def __call__(self, source: Tensor, valid_lens: Optional[np.ndarray] = None) -> Tensor:
        """Reconstruct from ``source`` of shape (t, d) or (B, t, d); frames past valid_lens stay zero."""
        if source.shape[-1] != self.d:
            raise ContractViolation(f"source has d={source.shape[-1]}, model expects d={self.d}")
        squeezed = source.ndim == 2
        x = ops.reshape(source, (1,) + source.shape) if squeezed else source
        batch, t = x.shape[0], x.shape[1]
        if valid_lens is None:
            valid_lens = np.full(batch, t)

        x = ops.fit_length(x, self.padded_length(t))
        # Sampling interval of the current sequence, in input frames
        stride = 1.0
        for block in self.blocks():
            stride = stride * block.layer.stride if isinstance(block.layer, Conv1d) else stride / block.layer.stride
            length = block.layer.output_length(x.shape[1])
            x = block(x, scaled_mask(valid_lens, length, stride))

        x = ops.fit_length(x, t)
        return ops.reshape(x, x.shape[1:]) if squeezed else x

    def layer_count(self) -> int:
        return len(self.blocks())

    def multiply_adds(self, t: int) -> int:
        length = self.padded_length(t)
        total = 0
        for block in self.blocks():
            total += block.layer.multiply_adds(length)
            length = block.layer.output_length(length)
        return total
