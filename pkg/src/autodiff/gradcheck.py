"""
Central finite-difference gradient checking.
"""
import logging
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from . import ops
from .tensor import Tensor, backward, zero_grad

logger = logging.getLogger(__name__)

ERROR_FLOOR = 1e-4


def _same_branches(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return len(a) == len(b) and all(x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a, b))


def numerical_gradient(
    loss_fn: Callable[[], Tensor],
    param: Tensor,
    eps: float = 1e-4,
    skip_kinks: bool = False,
) -> np.ndarray:
    """Estimate d loss / d param by central differences, perturbing ``param.data`` in place.

    With ``skip_kinks`` a coordinate whose +eps or -eps evaluation takes a different
    branch of any relu/max/min/abs/clamp than the unperturbed loss is returned as NaN.
    """
    base: List[np.ndarray] = []
    if skip_kinks:
        with ops.record_branches() as base:
            loss_fn()
    grad = np.zeros_like(param.data)
    flat = param.data.flat
    for i in range(param.data.size):
        original = flat[i]
        with ops.record_branches() as plus_branches:
            flat[i] = original + eps
            plus = loss_fn().item()
        with ops.record_branches() as minus_branches:
            flat[i] = original - eps
            minus = loss_fn().item()
        flat[i] = original
        if skip_kinks and not (_same_branches(base, plus_branches) and _same_branches(base, minus_branches)):
            grad.flat[i] = np.nan
        else:
            grad.flat[i] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Norm-wise relative error ||a - n|| / max(||a|| + ||n||, floor)."""
    denom = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / denom)


def elementwise_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                               floor: float = ERROR_FLOOR) -> np.ndarray:
    """|a - n| / max(|a| + |n|, floor) per element; below ``floor`` the error is absolute."""
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), floor)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Iterable[Tensor],
    eps: float = 1e-4,
    skip_kinks: bool = False,
    skipped: Optional[Dict[str, int]] = None,
) -> Dict[str, float]:
    """Compare analytic and numerical gradients for every parameter.

    Args:
        skip_kinks: leave out coordinates whose perturbation crosses a non-smooth branch
        skipped: if given, filled with the number of left-out coordinates per parameter

    Returns:
        Mapping of parameter name (or index) to the largest elementwise relative error
    """
    params: List[Tensor] = list(params)
    zero_grad(params)
    backward(loss_fn())
    report = {}
    for i, param in enumerate(params):
        name = getattr(param, "name", "") or str(i)
        analytic = param.grad.copy()
        numeric = numerical_gradient(loss_fn, param, eps, skip_kinks)
        kept = ~np.isnan(numeric)
        errors = elementwise_relative_error(analytic[kept], numeric[kept])
        report[name] = float(errors.max()) if errors.size else 0.0
        if skipped is not None:
            skipped[name] = int((~kept).sum())
        if not kept.all():
            logger.debug("Gradient check %s: %d coordinates cross a kink", name, int((~kept).sum()))
    zero_grad(params)
    return report
