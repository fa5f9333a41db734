"""
Loss terms: focal, DIoU, smooth-L1, reconstruction MAE, video-level BCE, and their composition.
Elementwise terms accept tensors of any shape; batch terms return one value per sample.
"""
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from src import config as defaults
from src.autodiff import Tensor, as_tensor, ops
from src.data.types import Batch
from src.errors import ContractViolation
from src.models import ModelConfig

Operand = Union[Tensor, float, np.ndarray]
Interval = Tuple[Operand, Operand]


def _const(value: Union[float, np.ndarray], like: Tensor) -> Tensor:
    return Tensor(np.broadcast_to(np.asarray(value, dtype=like.dtype), like.shape).copy())


def focal_loss(
    logit: Operand,
    target: Union[int, np.ndarray],
    alpha: float = defaults.FOCAL_ALPHA,
    gamma: float = defaults.FOCAL_GAMMA,
) -> Tensor:
    """-alpha_t (1 - p_t)^gamma log p_t with p = sigmoid(logit) clamped away from 0 and 1."""
    logit = as_tensor(logit)
    y = _const(target, logit)
    p = ops.clamp(ops.sigmoid(logit), defaults.PROB_CLAMP, 1.0 - defaults.PROB_CLAMP)
    p_t = p * y + (1.0 - p) * (1.0 - y)
    alpha_t = _const(np.where(y.data > 0, alpha, 1.0 - alpha), logit)
    modulation = ops.power(1.0 - p_t, gamma) if gamma != 0 else _const(1.0, logit)
    return -(alpha_t * modulation * ops.log(p_t))


def _interval_diou(pred_s: Tensor, pred_e: Tensor, gt_s: Tensor, gt_e: Tensor) -> Tensor:
    inter = ops.relu(ops.minimum(pred_e, gt_e) - ops.maximum(pred_s, gt_s))
    union = (pred_e - pred_s) + (gt_e - gt_s) - inter
    enclosure = ops.maximum(pred_e, gt_e) - ops.minimum(pred_s, gt_s)
    center_gap = (pred_s + pred_e) * 0.5 - (gt_s + gt_e) * 0.5
    return 1.0 - inter / union + ops.power(center_gap, 2.0) / ops.power(enclosure, 2.0)


def diou_loss(pred: Interval, gt: Interval) -> Tensor:
    """1 - IoU + (center distance / enclosing length)^2 for 1D intervals.

    Raises:
        ContractViolation: if either interval has end <= start
    """
    pred_s, pred_e = as_tensor(pred[0]), as_tensor(pred[1])
    gt_s, gt_e = as_tensor(gt[0]), as_tensor(gt[1])
    if np.any(pred_e.data <= pred_s.data) or np.any(gt_e.data <= gt_s.data):
        raise ContractViolation("diou_loss needs non-degenerate intervals (end > start)")
    return _interval_diou(pred_s, pred_e, gt_s, gt_e)


def smooth_l1_loss(pred: Interval, gt: Interval, beta: float = defaults.SMOOTH_L1_BETA) -> Tensor:
    """Mean over start and end of the smooth-L1 penalty."""
    if beta <= 0:
        raise ContractViolation(f"smooth-L1 beta must be positive, got {beta}")
    per_coordinate = []
    for p, g in zip(pred, gt):
        err = ops.absolute(as_tensor(p) - as_tensor(g))
        small = ops.minimum(err, _const(beta, err))
        per_coordinate.append(ops.power(small, 2.0) * (0.5 / beta) + (err - small))
    return (per_coordinate[0] + per_coordinate[1]) * 0.5


def det_loss(video_logit: Operand, video_target: Union[int, np.ndarray]) -> Tensor:
    """Binary cross-entropy on sigmoid(video_logit), as softplus(z) - y z."""
    logit = as_tensor(video_logit)
    return ops.softplus(logit) - logit * _const(video_target, logit)


def video_targets(p: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Logical OR of p over valid frames (last axis)."""
    return ((np.asarray(p) * np.asarray(mask)).max(axis=-1) > 0).astype(np.float64)


def rec_loss(
    x_v: Operand,
    x_a: Operand,
    recon,
    mask: np.ndarray,
    p: np.ndarray,
    pair_set: Sequence[str],
) -> Tensor:
    """(B,) mean absolute reconstruction error summed over pairs; exactly 0 for samples with a fake frame."""
    x_v, x_a = as_tensor(x_v), as_tensor(x_a)
    streams = {"a": x_a, "v": x_v}
    d = x_v.shape[-1]
    total = None
    for pair in pair_set:
        error = ops.absolute(recon[pair] - streams[pair[1]])
        per_sample = ops.sum(ops.sum(ops.apply_mask(error, mask), axis=-1), axis=-1)
        total = per_sample if total is None else total + per_sample
    real = video_targets(p, mask) == 0
    weights = np.where(real, 1.0 / (np.maximum(mask.sum(axis=-1), 1.0) * d), 0.0)
    return total * _const(weights, total)


def level_loss(focal: Tensor, regression: Tensor, p: np.ndarray, mask: np.ndarray) -> Tuple[Tensor, Tensor]:
    """Per-sample (focal sum, positive-gated regression sum) over a level, each / max(1, positives)."""
    p = np.asarray(p) * mask
    norm = 1.0 / np.maximum(1.0, p.sum(axis=-1))
    focal_sum = ops.sum(focal * _const(mask, focal), axis=-1)
    regression_sum = ops.sum(regression * _const(p, regression), axis=-1)
    return focal_sum * _const(norm, focal_sum), regression_sum * _const(norm, regression_sum)


def level_targets(batch: Batch, stride: int, length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Frame i of a level maps to original frame i * stride."""
    index = np.minimum(np.arange(length) * stride, batch.t - 1)
    return batch.p[:, index], batch.b[:, index, :]


def loc_loss(pyramid, batch: Batch, config: ModelConfig) -> Tuple[Tensor, Dict[str, Tensor]]:
    """(B,) localization loss averaged over pyramid levels, plus its focal/regression split."""
    focal_total, regression_total = None, None
    for level in pyramid.levels:
        p, b = level_targets(batch, level.stride, level.length)
        p = p * level.mask
        focal = focal_loss(level.logits, p, config.focal_alpha, config.focal_gamma)

        anchors = (np.arange(level.length)[None, :] + 0.5) * level.stride / batch.fps[:, None]
        left = ops.reshape(ops.slice_axis(level.offsets, -1, 0, 1), level.logits.shape)
        right = ops.reshape(ops.slice_axis(level.offsets, -1, 1, 2), level.logits.shape)
        anchor = _const(anchors, level.logits)
        pred = (anchor - left, anchor + right)
        # Negatives get a placeholder interval; their terms are gated out by p
        gt_s = _const(np.where(p > 0, b[..., 0], 0.0), level.logits)
        gt_e = _const(np.where(p > 0, b[..., 1], 1.0), level.logits)
        if config.regression_term == "diou":
            regression = _interval_diou(pred[0], pred[1], gt_s, gt_e)
        else:
            regression = smooth_l1_loss(pred, (gt_s, gt_e), config.smooth_l1_beta)

        focal_part, regression_part = level_loss(focal, regression, p, level.mask)
        focal_total = focal_part if focal_total is None else focal_total + focal_part
        regression_total = regression_part if regression_total is None else regression_total + regression_part

    scale = 1.0 / len(pyramid.levels)
    focal_total = focal_total * scale
    regression_total = regression_total * scale
    return focal_total + regression_total, {"focal": focal_total, "regression": regression_total}


def total_loss(loc: Operand, rec: Operand, det: Operand, loss_terms: Sequence[str]) -> Tensor:
    """Unweighted mean of the active top-level terms; loc is always active."""
    active = [as_tensor(loc)]
    if "rec_mae" in loss_terms:
        active.append(as_tensor(rec))
    if "det_bce" in loss_terms:
        active.append(as_tensor(det))
    total = active[0]
    for term in active[1:]:
        total = total + term
    return total * (1.0 / len(active))


@dataclass
class LossReport:
    """Batch-mean loss terms; ``total`` keeps the graph for backward()."""
    total: Tensor
    loc: float
    rec: float
    det: float
    terms: Dict[str, float] = field(default_factory=dict)
    per_sample: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def as_dict(self) -> Dict[str, float]:
        return {"loss": self.total.item(), "loc": self.loc, "rec": self.rec, "det": self.det, **self.terms}


def compute_losses(recon, pyramid, batch: Batch, config: ModelConfig) -> LossReport:
    """Evaluate every configured term on a forward pass, compose them per sample, then average."""
    dtype = pyramid.levels[0].logits.dtype
    mask = batch.mask[..., None]
    x_v = Tensor((batch.x_v * mask).astype(dtype))
    x_a = Tensor((batch.x_a * mask).astype(dtype))

    loc, parts = loc_loss(pyramid, batch, config)
    rec = rec_loss(x_v, x_a, recon, batch.mask, batch.p, config.pair_set)
    det = det_loss(pyramid.video_logits(), video_targets(batch.p, batch.mask))
    per_sample = total_loss(loc, rec, det, config.loss_terms)
    return LossReport(
        total=ops.mean(per_sample),
        loc=float(loc.data.mean()),
        rec=float(rec.data.mean()),
        det=float(det.data.mean()),
        terms={name: float(value.data.mean()) for name, value in parts.items()},
        per_sample=per_sample.data.copy(),
    )
