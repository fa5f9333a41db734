"""Evaluation module initialization."""
from .metrics import (
    MetricsCalculator,
    iou_1d,
    segment_iou,
    ap_at_iou,
    ar_at_k,
    roc_auc,
    binary_ap,
)

__all__ = [
    'MetricsCalculator',
    'iou_1d',
    'segment_iou',
    'ap_at_iou',
    'ar_at_k',
    'roc_auc',
    'binary_ap',
]
