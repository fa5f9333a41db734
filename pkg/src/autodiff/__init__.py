"""Automatic differentiation module initialization."""
from .tensor import Tensor, Parameter, Graph, as_tensor, backward, zero_grad
from .conv import conv1d, deconv1d, layer_norm, same_padding
from . import ops
from .gradcheck import check_gradients, elementwise_relative_error, numerical_gradient, relative_error

__all__ = [
    'Tensor',
    'Parameter',
    'Graph',
    'as_tensor',
    'backward',
    'zero_grad',
    'conv1d',
    'deconv1d',
    'layer_norm',
    'same_padding',
    'ops',
    'check_gradients',
    'numerical_gradient',
    'relative_error',
    'elementwise_relative_error',
]
