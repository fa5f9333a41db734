"""
Elementwise, reduction and structural primitives with their vector-Jacobian products.
Binary operands must share a shape, or one of them must hold a single element.
"""
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np

from src.errors import ContractViolation
from .tensor import Tensor, as_tensor, make_node

Operand = Union[Tensor, float, np.ndarray]
Axis = Optional[int]

# Branch decisions of non-smooth ops, collected while a recording is active
_branch_log: Optional[List[np.ndarray]] = None


@contextmanager
def record_branches() -> Iterator[List[np.ndarray]]:
    """Collect the branch pattern (mask or argmax) of every non-smooth op evaluated inside the block."""
    global _branch_log
    previous, _branch_log = _branch_log, []
    try:
        yield _branch_log
    finally:
        _branch_log = previous


def _note_branch(pattern: np.ndarray) -> None:
    if _branch_log is not None:
        _branch_log.append(np.array(pattern, copy=True))


def _pair(a: Operand, b: Operand):
    a_is_tensor, b_is_tensor = isinstance(a, Tensor), isinstance(b, Tensor)
    dtype = a.dtype if a_is_tensor else (b.dtype if b_is_tensor else np.float64)
    a, b = as_tensor(a, dtype), as_tensor(b, dtype)
    if a.shape != b.shape and a.data.size != 1 and b.data.size != 1:
        raise ContractViolation(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _reduce_to(grad: np.ndarray, shape) -> np.ndarray:
    """Fold a gradient back onto a single-element operand."""
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum()).reshape(shape)


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward_fn(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return make_node(a.data + b.data, (a, b), backward_fn, "add")


def subtract(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward_fn(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return make_node(a.data - b.data, (a, b), backward_fn, "subtract")


def multiply(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward_fn(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return make_node(a.data * b.data, (a, b), backward_fn, "multiply")


def divide(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    out = a.data / b.data

    def backward_fn(g):
        return (
            _reduce_to(g / b.data, a.shape),
            _reduce_to(-g * out / b.data, b.shape),
        )

    return make_node(out, (a, b), backward_fn, "divide")


def minimum(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    pick_a = a.data <= b.data
    _note_branch(pick_a)

    def backward_fn(g):
        return _reduce_to(g * pick_a, a.shape), _reduce_to(g * ~pick_a, b.shape)

    return make_node(np.minimum(a.data, b.data), (a, b), backward_fn, "minimum")


def maximum(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    pick_a = a.data >= b.data
    _note_branch(pick_a)

    def backward_fn(g):
        return _reduce_to(g * pick_a, a.shape), _reduce_to(g * ~pick_a, b.shape)

    return make_node(np.maximum(a.data, b.data), (a, b), backward_fn, "maximum")


def power(x: Tensor, exponent: float) -> Tensor:
    out = np.power(x.data, exponent)

    def backward_fn(g):
        return (g * exponent * np.power(x.data, exponent - 1),)

    return make_node(out, (x,), backward_fn, "pow")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def backward_fn(g):
        return (g * out,)

    return make_node(out, (x,), backward_fn, "exp")


def log(x: Tensor) -> Tensor:
    def backward_fn(g):
        return (g / x.data,)

    return make_node(np.log(x.data), (x,), backward_fn, "log")


def absolute(x: Tensor) -> Tensor:
    _note_branch(np.sign(x.data))

    def backward_fn(g):
        return (g * np.sign(x.data),)

    return make_node(np.abs(x.data), (x,), backward_fn, "abs")


def relu(x: Tensor) -> Tensor:
    active = x.data > 0
    _note_branch(active)

    def backward_fn(g):
        return (g * active,)

    return make_node((x.data * active).astype(x.dtype), (x,), backward_fn, "relu")


def _stable_sigmoid(values: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -values))


def sigmoid(x: Tensor) -> Tensor:
    out = _stable_sigmoid(x.data)

    def backward_fn(g):
        return (g * out * (1.0 - out),)

    return make_node(out, (x,), backward_fn, "sigmoid")


def softplus(x: Tensor) -> Tensor:
    def backward_fn(g):
        return (g * _stable_sigmoid(x.data),)

    return make_node(np.logaddexp(0.0, x.data), (x,), backward_fn, "softplus")


def clamp(x: Tensor, low: float, high: float) -> Tensor:
    inside = (x.data >= low) & (x.data <= high)
    _note_branch(inside)

    def backward_fn(g):
        return (g * inside,)

    return make_node(np.clip(x.data, low, high), (x,), backward_fn, "clamp")


def _expand(g: np.ndarray, shape, axis: Axis) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    return np.broadcast_to(np.expand_dims(g, axis), shape)


def sum(x: Tensor, axis: Axis = None) -> Tensor:  # noqa: A001 - mirrors numpy naming
    def backward_fn(g):
        return (_expand(g, x.shape, axis).copy(),)

    return make_node(np.sum(x.data, axis=axis), (x,), backward_fn, "sum")


def mean(x: Tensor, axis: Axis = None) -> Tensor:
    count = x.data.size if axis is None else x.shape[axis]

    def backward_fn(g):
        return (_expand(g, x.shape, axis) / count,)

    return make_node(np.mean(x.data, axis=axis), (x,), backward_fn, "mean")


def max(x: Tensor, axis: Axis = None) -> Tensor:  # noqa: A001
    """Maximum; the gradient flows to the first maximal element only."""
    if axis is None:
        index = int(np.argmax(x.data))
        _note_branch(np.asarray(index))

        def backward_fn(g):
            grad = np.zeros_like(x.data)
            grad.flat[index] = g
            return (grad,)

        return make_node(np.max(x.data), (x,), backward_fn, "max")

    index = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    _note_branch(index)

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        np.put_along_axis(grad, index, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return make_node(np.max(x.data, axis=axis), (x,), backward_fn, "max")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along an axis (channels by default)."""
    tensors = list(tensors)
    if not tensors:
        raise ContractViolation("concat needs at least one tensor")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward_fn(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ContractViolation(f"concat shape mismatch: {[t.shape for t in tensors]}") from exc
    return make_node(out, tuple(tensors), backward_fn, "concat")


def reshape(x: Tensor, shape) -> Tensor:
    def backward_fn(g):
        return (g.reshape(x.shape),)

    return make_node(x.data.reshape(shape), (x,), backward_fn, "reshape")


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward_fn(g):
        grad = np.zeros_like(x.data)
        grad[index] = g
        return (grad,)

    return make_node(x.data[index], (x,), backward_fn, "slice")


def fit_length(x: Tensor, length: int) -> Tensor:
    """Crop or right-pad with zeros along the time axis (second to last)."""
    current = x.shape[-2]
    if current == length:
        return x
    if current > length:
        return slice_axis(x, -2, 0, length)
    widths = [(0, 0)] * x.ndim
    widths[-2] = (0, length - current)

    def backward_fn(g):
        return (np.take(g, np.arange(current), axis=-2),)

    return make_node(np.pad(x.data, widths), (x,), backward_fn, "pad")


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Repeat every timestep ``factor`` times."""
    if factor == 1:
        return x
    shape = x.shape

    def backward_fn(g):
        folded = g.reshape(shape[:-2] + (shape[-2], factor, shape[-1]))
        return (folded.sum(axis=-2),)

    return make_node(np.repeat(x.data, factor, axis=-2), (x,), backward_fn, "upsample")


def apply_mask(x: Tensor, mask: np.ndarray) -> Tensor:
    """Zero out timesteps where ``mask`` is 0; ``mask`` covers the batch/time axes."""
    weights = np.broadcast_to(np.asarray(mask, dtype=x.dtype)[..., None], x.shape)
    return multiply(x, Tensor(weights))
