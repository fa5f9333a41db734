"""
Detection metrics.
Temporal AP@IoU and AR@K over segment predictions, plus ROC-AUC and AP for video-level scores.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src import config
from src.errors import ContractViolation
from src.models import EvalRecord

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


def _undefined(metric: str, reason: str) -> float:
    logger.warning("%s undefined: %s", metric, reason)
    return float("nan")


def iou_1d(a: Interval, b: Interval) -> float:
    """|a ∩ b| / |a ∪ b| for non-degenerate intervals."""
    if not a[1] > a[0] or not b[1] > b[0]:
        raise ContractViolation(f"degenerate interval in iou_1d: {a}, {b}")
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union


def segment_iou(target: Sequence[float], candidates: np.ndarray) -> np.ndarray:
    """IoU of one (start, end) against every row of an (n, 2) array."""
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    inter = np.clip(
        np.minimum(target[1], candidates[:, 1]) - np.maximum(target[0], candidates[:, 0]), 0.0, None
    )
    union = (candidates[:, 1] - candidates[:, 0]) + (target[1] - target[0]) - inter
    return inter / union


def _ranked(records: Sequence[EvalRecord], top_k: Optional[int] = None) -> List[Tuple[int, float, Interval]]:
    """(record index, rho, interval) for every kept prediction, sorted by rho descending, stable."""
    pooled = []
    for r, record in enumerate(records):
        predictions = [(p.rho, (p.s, p.e)) for p in record.predictions]
        if top_k is not None:
            order = sorted(range(len(predictions)), key=lambda i: -predictions[i][0])[:top_k]
            predictions = [predictions[i] for i in sorted(order)]
        pooled.extend((r, rho, interval) for rho, interval in predictions)
    order = sorted(range(len(pooled)), key=lambda i: -pooled[i][1])
    return [pooled[i] for i in order]


def _match(records: Sequence[EvalRecord], ranked, iou_threshold: float) -> np.ndarray:
    """Greedy matching: each prediction takes the highest-IoU unmatched ground truth above threshold."""
    gt = [np.asarray(record.ground_truth, dtype=np.float64).reshape(-1, 2) for record in records]
    taken = [np.zeros(len(g), dtype=bool) for g in gt]
    hits = np.zeros(len(ranked), dtype=bool)
    for i, (r, _, interval) in enumerate(ranked):
        if len(gt[r]) == 0:
            continue
        ious = segment_iou(interval, gt[r])
        ious[taken[r]] = -1.0
        best = int(np.argmax(ious))
        if ious[best] >= iou_threshold:
            taken[r][best] = True
            hits[i] = True
    return hits


def _average_precision(hits: np.ndarray, n_positive: int) -> float:
    """All-point (non-interpolated) AP: sum of precision at each recall increment."""
    if len(hits) == 0:
        return 0.0
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, len(hits) + 1)
    return float(np.sum(precision[hits]) / n_positive)


def ap_at_iou(records: Sequence[EvalRecord], iou_threshold: float) -> float:
    """Average precision of all pooled predictions at one temporal-IoU threshold."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ContractViolation(f"iou_threshold must lie in (0, 1], got {iou_threshold}")
    n_gt = sum(len(r.ground_truth) for r in records)
    if n_gt == 0:
        return _undefined(f"ap@{iou_threshold}", "no ground-truth segments")
    ranked = _ranked(records)
    return _average_precision(_match(records, ranked, iou_threshold), n_gt)


def ar_at_k(
    records: Sequence[EvalRecord],
    k: int,
    iou_thresholds: Optional[Sequence[float]] = None,
) -> float:
    """Recall with the top-k predictions per video, averaged over IoU thresholds 0.5:0.05:0.95."""
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    if iou_thresholds is None:
        iou_thresholds = np.linspace(0.5, 0.95, 10)
    n_gt = sum(len(r.ground_truth) for r in records)
    if n_gt == 0:
        return _undefined(f"ar@{k}", "no ground-truth segments")
    ranked = _ranked(records, top_k=k)
    recalls = [_match(records, ranked, t).sum() / n_gt for t in iou_thresholds]
    return float(np.mean(recalls))


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outranks a random negative, ties counting one half."""
    labels = np.asarray(labels, dtype=int)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return _undefined("auc", "needs both classes")
    ranks = pd.Series(np.asarray(scores, dtype=np.float64)).rank(method="average").to_numpy()
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def binary_ap(scores: Sequence[float], labels: Sequence[int]) -> float:
    """All-point AP of the list ranked by score (descending, ties in input order)."""
    labels = np.asarray(labels, dtype=int)
    n_pos = int(labels.sum())
    if n_pos == 0:
        return _undefined("ap_binary", "no positives")
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return _average_precision(labels[order] == 1, n_pos)


class MetricsCalculator:
    """Calculate the metric report for a set of evaluated videos."""

    def __init__(
        self,
        ap_thresholds: Sequence[float] = tuple(config.AP_IOU_THRESHOLDS),
        ar_top_k: Sequence[int] = tuple(config.AR_TOP_K),
    ):
        self.ap_thresholds = list(ap_thresholds)
        self.ar_top_k = list(ar_top_k)

    def calculate_metrics(self, records: Sequence[EvalRecord]) -> Dict[str, float]:
        """Compute the full report.

        Args:
            records: one EvalRecord per video

        Returns:
            Dictionary with ap@{iou}, ar@{k}, auc and ap_binary keys
        """
        metrics: Dict[str, float] = {}
        for threshold in self.ap_thresholds:
            metrics[f"ap@{threshold}"] = ap_at_iou(records, threshold)
        for k in self.ar_top_k:
            metrics[f"ar@{k}"] = ar_at_k(records, k)
        scores = [r.video_score for r in records]
        labels = [r.video_label for r in records]
        metrics["auc"] = roc_auc(scores, labels)
        metrics["ap_binary"] = binary_ap(scores, labels)
        return metrics

    def criterion(self, metrics: Dict[str, float], keys: Sequence[str],
                  weights: Optional[Dict[str, float]] = None) -> float:
        """Weighted sum of selected report entries (weight 1 unless given)."""
        weights = weights or {}
        return float(sum(weights.get(key, 1.0) * metrics[key] for key in keys))
