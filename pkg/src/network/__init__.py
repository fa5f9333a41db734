"""Network module initialization."""
from .layers import Module, Conv1d, Deconv1d, LayerNorm, ConvBlock, scaled_mask
from .reconstruction import Reconstructor
from .encoder import DiscrepancyEncoder, PyramidFeatures
from .heads import ClassificationHead, RegressionHead
from .model import (
    ForgeryLocalizer,
    ReconstructionSet,
    PyramidLevel,
    PyramidOutput,
    compute_discrepancies,
)
from .checkpoint import save_checkpoint, read_checkpoint, load_checkpoint

__all__ = [
    'Module',
    'Conv1d',
    'Deconv1d',
    'LayerNorm',
    'ConvBlock',
    'scaled_mask',
    'Reconstructor',
    'DiscrepancyEncoder',
    'PyramidFeatures',
    'ClassificationHead',
    'RegressionHead',
    'ForgeryLocalizer',
    'ReconstructionSet',
    'PyramidLevel',
    'PyramidOutput',
    'compute_discrepancies',
    'save_checkpoint',
    'read_checkpoint',
    'load_checkpoint',
]
