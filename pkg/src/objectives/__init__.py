"""Objectives module initialization."""
from .losses import (
    focal_loss,
    diou_loss,
    smooth_l1_loss,
    det_loss,
    rec_loss,
    loc_loss,
    level_loss,
    level_targets,
    total_loss,
    video_targets,
    compute_losses,
    LossReport,
)

__all__ = [
    'focal_loss',
    'diou_loss',
    'smooth_l1_loss',
    'det_loss',
    'rec_loss',
    'loc_loss',
    'level_loss',
    'level_targets',
    'total_loss',
    'video_targets',
    'compute_losses',
    'LossReport',
]
