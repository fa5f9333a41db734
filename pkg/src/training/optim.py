"""
Adam optimizer, reduce-on-plateau learning-rate schedule and early stopping.
Schedule and stopping maximize a validation criterion.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.autodiff import Parameter
from src.errors import ContractViolation, NonFiniteError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Step counter and first/second moment estimates, one array per parameter."""
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: Sequence[Parameter]) -> "AdamState":
        return cls(step=0, m=[np.zeros_like(p.data) for p in params], v=[np.zeros_like(p.data) for p in params])


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """Bias-corrected Adam update of ``params`` in place.

    Raises:
        NonFiniteError: a gradient holds NaN or inf; the message names the parameter
        ContractViolation: gradient or moment shapes differ from the parameters
    """
    if len(grads) != len(params) or len(state.m) != len(params):
        raise ContractViolation(f"{len(params)} parameters, {len(grads)} gradients, {len(state.m)} moments")
    for i, (param, grad) in enumerate(zip(params, grads)):
        if grad.shape != param.shape:
            raise ContractViolation(f"gradient shape {grad.shape} != parameter shape {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite gradient for parameter {param.name or i}")

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad ** 2
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        param.data = param.data - lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


class Adam:
    """Adam over a fixed parameter list, reading the gradients accumulated by backward()."""

    def __init__(self, params: Sequence[Parameter], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like(self.params)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        adam_step(self.params, [p.grad for p in self.params], self.state, self.lr, self.beta1, self.beta2, self.eps)


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without improvement."""

    def __init__(self, factor: float = 0.5, patience: int = 5, threshold: float = 1e-4):
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.best: float = -np.inf
        self.num_bad_epochs = 0

    def step(self, criterion: float, lr: float) -> float:
        """Record an epoch's criterion and return the (possibly reduced) learning rate."""
        if criterion > self.best + self.threshold:
            self.best = criterion
            self.num_bad_epochs = 0
            return lr
        self.num_bad_epochs += 1
        if self.num_bad_epochs >= self.patience:
            self.num_bad_epochs = 0
            logger.info("Plateau: reducing learning rate %.6g -> %.6g", lr, lr * self.factor)
            return lr * self.factor
        return lr


class EarlyStopping:
    """Stop training when the criterion has not improved for ``patience`` epochs."""

    def __init__(self, patience: int = 10, min_delta: float = 1e-4):
        self.patience = patience
        self.min_delta = min_delta
        self.best: Optional[float] = None
        self.counter = 0
        self.early_stop = False

    def __call__(self, criterion: float) -> bool:
        if self.best is None and np.isfinite(criterion):
            self.best = criterion
            self.counter = 0
        elif self.best is not None and criterion > self.best + self.min_delta:
            self.best = criterion
            self.counter = 0
        else:
            self.counter += 1
            logger.debug("Early stopping counter %d of %d", self.counter, self.patience)
            if self.counter >= self.patience:
                logger.info("Early stopping after %d epochs without improvement", self.counter)
                self.early_stop = True
        return self.early_stop
