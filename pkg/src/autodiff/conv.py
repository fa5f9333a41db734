"""
1D convolution, transposed convolution and layer normalization primitives.
Inputs are (t, C) or batched (B, t, C); time is the second to last axis.
"""
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ContractViolation
from .tensor import Tensor, as_tensor, make_node


def same_padding(kernel_size: int) -> Tuple[int, int]:
    """Left pad floor(k/2), right pad k-1-floor(k/2)."""
    left = kernel_size // 2
    return left, kernel_size - 1 - left


def _as_batch(x: Tensor) -> Tuple[np.ndarray, bool]:
    if x.ndim == 2:
        return x.data[None], True
    if x.ndim == 3:
        return x.data, False
    raise ContractViolation(f"expected a (t, C) or (B, t, C) tensor, got shape {x.shape}")


def _check_kernel(weight: Tensor, bias: Optional[Tensor], channels: int, stride: int, role: str):
    if weight.ndim != 3:
        raise ContractViolation(f"{role} weight must be rank 3, got shape {weight.shape}")
    kernel_size = weight.shape[2]
    if kernel_size % 2 != 1:
        raise ContractViolation(f"{role} kernel size must be odd, got {kernel_size}")
    if weight.shape[1 if role == "conv1d" else 0] != channels:
        raise ContractViolation(
            f"{role} weight {weight.shape} does not match {channels} input channels"
        )
    if stride not in (1, 2):
        raise ContractViolation(f"{role} stride must be 1 or 2, got {stride}")
    out_channels = weight.shape[0 if role == "conv1d" else 1]
    if bias is not None and bias.shape != (out_channels,):
        raise ContractViolation(f"{role} bias shape {bias.shape} != ({out_channels},)")


def _strided_windows(padded: np.ndarray, kernel_size: int, stride: int, length: int) -> np.ndarray:
    """View of shape (B, length, C, k) with windows starting at stride*i."""
    return sliding_window_view(padded, kernel_size, axis=1)[:, ::stride][:, :length]


def _scatter_taps(values: np.ndarray, weight: np.ndarray, stride: int, padded_len: int) -> np.ndarray:
    """Adjoint of window extraction: out[stride*i + j] += values[i] @ weight[:, :, j]."""
    batch, length, _ = values.shape
    out = np.zeros((batch, padded_len, weight.shape[1]), dtype=np.result_type(values, weight))
    span = stride * (length - 1) + 1
    for j in range(weight.shape[2]):
        out[:, j:j + span:stride, :] += values @ weight[:, :, j]
    return out


def conv1d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1) -> Tensor:
    """Same-padded 1D convolution.

    Args:
        x: (t, C_in) or (B, t, C_in) input
        weight: (C_out, C_in, k) kernel, k odd
        bias: (C_out,) or None
        stride: 1 or 2; output length is ceil(t / stride)

    Returns:
        Tensor with C_out channels
    """
    x, weight = as_tensor(x), as_tensor(weight)
    bias = as_tensor(bias) if bias is not None else None
    xd, squeezed = _as_batch(x)
    _check_kernel(weight, bias, xd.shape[2], stride, "conv1d")

    length = xd.shape[1]
    kernel_size = weight.shape[2]
    left, right = same_padding(kernel_size)
    out_len = -(-length // stride)
    padded = np.pad(xd, ((0, 0), (left, right), (0, 0)))
    windows = _strided_windows(padded, kernel_size, stride, out_len)
    out = np.einsum("btck,ock->bto", windows, weight.data, optimize=True)
    if bias is not None:
        out = out + bias.data

    def backward_fn(g):
        gd = g[None] if squeezed else g
        win = _strided_windows(padded, kernel_size, stride, out_len)
        grad_w = np.einsum("btck,bto->ock", win, gd, optimize=True)
        grad_x = _scatter_taps(gd, weight.data, stride, padded.shape[1])[:, left:left + length]
        grad_b = gd.sum(axis=(0, 1)) if bias is not None else None
        if squeezed:
            grad_x = grad_x[0]
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_node(out[0] if squeezed else out, parents, backward_fn, "conv1d")


def deconv1d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 2) -> Tensor:
    """Transposed 1D convolution, the linear adjoint of ``conv1d`` with the same kernel.

    Args:
        x: (t, C_in) or (B, t, C_in) input
        weight: (C_in, C_out, k) kernel, i.e. the kernel of the conv1d it inverts
        bias: (C_out,) or None
        stride: upsampling factor; output length is exactly stride * t

    Returns:
        Tensor with C_out channels and stride * t timesteps
    """
    x, weight = as_tensor(x), as_tensor(weight)
    bias = as_tensor(bias) if bias is not None else None
    xd, squeezed = _as_batch(x)
    _check_kernel(weight, bias, xd.shape[2], stride, "deconv1d")

    length = xd.shape[1]
    kernel_size = weight.shape[2]
    left, right = same_padding(kernel_size)
    out_len = stride * length
    padded_len = out_len + kernel_size - 1
    out = _scatter_taps(xd, weight.data, stride, padded_len)[:, left:left + out_len]
    if bias is not None:
        out = out + bias.data

    def backward_fn(g):
        gd = g[None] if squeezed else g
        padded = np.pad(gd, ((0, 0), (left, right), (0, 0)))
        win = _strided_windows(padded, kernel_size, stride, length)
        grad_x = np.einsum("btck,ock->bto", win, weight.data, optimize=True)
        grad_w = np.einsum("bto,btck->ock", xd, win, optimize=True)
        grad_b = gd.sum(axis=(0, 1)) if bias is not None else None
        if squeezed:
            grad_x = grad_x[0]
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_node(out[0] if squeezed else out, parents, backward_fn, "deconv1d")


def layer_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize every timestep over its channels, then scale and shift."""
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    channels = x.shape[-1]
    if gain.shape != (channels,) or shift.shape != (channels,):
        raise ContractViolation(
            f"layer_norm gain/shift must be ({channels},), got {gain.shape}/{shift.shape}"
        )
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    variance = (centered ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + eps)
    normalized = centered * inv_std
    out = normalized * gain.data + shift.data
    reduce_axes = tuple(range(x.ndim - 1))

    def backward_fn(g):
        grad_gain = (g * normalized).sum(axis=reduce_axes)
        grad_shift = g.sum(axis=reduce_axes)
        d_norm = g * gain.data
        grad_x = inv_std * (
            d_norm
            - d_norm.mean(axis=-1, keepdims=True)
            - normalized * (d_norm * normalized).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gain, grad_shift

    return make_node(out, (x, gain, shift), backward_fn, "layer_norm")
