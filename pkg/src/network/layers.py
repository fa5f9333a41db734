"""
Parameter-holding layers built on the autodiff primitives.
Modules enumerate their parameters in attribute declaration order.
"""
import math
from typing import Iterator, List, Optional, Tuple

import numpy as np

from src.autodiff import Parameter, Tensor, conv1d, deconv1d, layer_norm, ops


class Module:
    """Base class: walks attributes (in assignment order) to find parameters and sub-modules."""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            path = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(path + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")
            elif isinstance(value, dict):
                for key, item in value.items():
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{key}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def assign_names(self) -> None:
        """Label every parameter with its attribute path, used in diagnostics and checkpoints."""
        for path, param in self.named_parameters():
            param.name = path

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()


class Conv1d(Module):
    """Same-padded convolution with uniform(+-1/sqrt(C_in * k)) initialization."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, stride: int,
                 rng: np.random.Generator):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        bound = 1.0 / math.sqrt(in_channels * kernel_size)
        self.weight = Parameter(rng.uniform(-bound, bound, (out_channels, in_channels, kernel_size)))
        self.bias = Parameter(rng.uniform(-bound, bound, (out_channels,)))

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.weight, self.bias, self.stride)

    def output_length(self, length: int) -> int:
        return -(-length // self.stride)

    def multiply_adds(self, length: int) -> int:
        return self.output_length(length) * self.out_channels * self.in_channels * self.kernel_size


class Deconv1d(Module):
    """Transposed convolution; multiplies the sequence length by ``stride``."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 2):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        bound = 1.0 / math.sqrt(out_channels * kernel_size)
        self.weight = Parameter(rng.uniform(-bound, bound, (in_channels, out_channels, kernel_size)))
        self.bias = Parameter(rng.uniform(-bound, bound, (out_channels,)))

    def __call__(self, x: Tensor) -> Tensor:
        return deconv1d(x, self.weight, self.bias, self.stride)

    def output_length(self, length: int) -> int:
        return length * self.stride

    def multiply_adds(self, length: int) -> int:
        return length * self.in_channels * self.out_channels * self.kernel_size


class LayerNorm(Module):
    def __init__(self, channels: int, eps: float):
        self.eps = eps
        self.gain = Parameter(np.ones(channels))
        self.shift = Parameter(np.zeros(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.shift, self.eps)


class ConvBlock(Module):
    """conv or deconv, optionally followed by LayerNorm and ReLU; masked afterwards."""

    def __init__(self, layer: Module, eps: float, normalize: bool = True):
        self.layer = layer
        self.norm = LayerNorm(layer.out_channels, eps) if normalize else None

    @property
    def out_channels(self) -> int:
        return self.layer.out_channels

    def __call__(self, x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
        out = self.layer(x)
        if self.norm is not None:
            out = ops.relu(self.norm(out))
        if mask is not None:
            out = ops.apply_mask(out, mask)
        return out


def scaled_mask(valid_lens: np.ndarray, length: int, stride: float) -> np.ndarray:
    """(B, length) prefix mask of a sequence sampled every ``stride`` input frames.

    Position i is valid iff i < ceil(valid_len / stride); strides below 1 describe
    upsampled sequences.
    """
    valid = np.ceil(np.asarray(valid_lens, dtype=np.float64) / stride)
    return (np.arange(length)[None, :] < valid[:, None]).astype(np.float64)
