"""Bias-corrected Adam over named numpy parameters."""

import logging
from typing import Dict, Tuple

import numpy as np

from augnet.errors import DimensionError, NonFiniteGradientError

logger = logging.getLogger(__name__)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    moments: Tuple[np.ndarray, np.ndarray],
    step: int,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    name: str = "param",
) -> np.ndarray:
    """Apply one Adam update to ``param`` in place.

    Args:
        param: Parameter array, updated in place
        grad: Gradient of the same shape
        moments: (first, second) moment buffers, updated in place
        step: 1-based step number used for bias correction
        lr: Learning rate
        betas: Exponential decay rates of the two moments
        eps: Denominator offset
        name: Parameter name for diagnostics

    Returns:
        The updated parameter array

    Raises:
        NonFiniteGradientError: If ``grad`` has NaN or infinite entries
    """
    first, second = moments
    if grad.shape != param.shape or first.shape != param.shape:
        raise DimensionError(
            f"'{name}': gradient {grad.shape} / moments {first.shape} vs param {param.shape}"
        )
    finite = np.isfinite(grad)
    if not finite.all():
        bad = int((~finite).sum())
        logger.error(f"Aborting: {bad} non-finite gradient entries in '{name}'")
        raise NonFiniteGradientError(name, bad, step)

    beta1, beta2 = betas
    first *= beta1
    first += (1.0 - beta1) * grad
    second *= beta2
    second += (1.0 - beta2) * (grad * grad)

    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    param -= (lr / correction1) * first / (np.sqrt(second / correction2) + eps)
    return param


class Adam:
    """Moment buffers and step counter for a dict of parameters."""

    def __init__(
        self,
        lr: float,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.first: Dict[str, np.ndarray] = {}
        self.second: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        """Update every parameter that has a gradient."""
        # Validate everything first so a bad gradient leaves all params untouched
        for name, grad in grads.items():
            if not np.all(np.isfinite(grad)):
                bad = int((~np.isfinite(grad)).sum())
                logger.error(f"Aborting: {bad} non-finite gradient entries in '{name}'")
                raise NonFiniteGradientError(name, bad, self.step_count + 1)

        self.step_count += 1
        for name, grad in grads.items():
            param = params[name]
            if name not in self.first:
                self.first[name] = np.zeros_like(param)
                self.second[name] = np.zeros_like(param)
            adam_step(
                param,
                grad,
                (self.first[name], self.second[name]),
                self.step_count,
                self.lr,
                self.betas,
                self.eps,
                name=name,
            )

    def state_copy(self) -> "Adam":
        """Deep copy of the optimizer state."""
        clone = Adam(self.lr, self.betas, self.eps)
        clone.step_count = self.step_count
        clone.first = {k: v.copy() for k, v in self.first.items()}
        clone.second = {k: v.copy() for k, v in self.second.items()}
        return clone
