"""Trainable base embeddings and K-step linear propagation with its adjoint."""

from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from augnet.engine.augment import AugmentedOperator
from augnet.errors import ConfigurationError, DimensionError


class LayerStack(BaseModel):
    """Base embeddings and every propagated layer, all (n+m) x d."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    layers: List[np.ndarray] = Field(description="K+1 dense layers, layer 0 is the base")

    @property
    def k(self) -> int:
        return len(self.layers) - 1

    @property
    def d(self) -> int:
        return int(self.layers[0].shape[1])

    def rows(self, entities: np.ndarray) -> np.ndarray:
        """Layer rows of ``entities`` as a (K+1, len(entities), d) array."""
        return np.stack([layer[entities] for layer in self.layers])

    def final_node_embeddings(self, n: int) -> np.ndarray:
        """Node rows of the last layer, used as exported node embeddings."""
        return self.layers[-1][:n]


def init_embeddings(size: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init in ``[-0.5/d, 0.5/d]``."""
    if dim < 1:
        raise ConfigurationError(f"embedding dimension must be >= 1, got {dim}")
    bound = 0.5 / dim
    return rng.uniform(-bound, bound, size=(size, dim))


def forward(op: AugmentedOperator, base: np.ndarray, k: int) -> LayerStack:
    """Propagate ``base`` through ``k`` sparse products, keeping every layer."""
    if base.ndim != 2 or base.shape[0] != op.size:
        raise DimensionError(
            f"base embeddings {base.shape} do not match operator size {op.size}"
        )
    if k < 0:
        raise ConfigurationError(f"layer count must be >= 0, got {k}")

    layers = [base]
    for _ in range(k):
        layers.append(np.asarray(op.transition @ layers[-1]))
    return LayerStack(layers=layers)


def backward(op: AugmentedOperator, grad_layers: Sequence[np.ndarray]) -> np.ndarray:
    """Gradient w.r.t. the base: ``sum_k (P^T)^k grad_layers[k]``.

    Evaluated in Horner form so each adjoint product is applied once per layer.
    """
    if not grad_layers:
        raise DimensionError("at least one layer gradient is required")
    shape = grad_layers[0].shape
    for grad in grad_layers:
        if grad.shape != shape or shape[0] != op.size:
            raise DimensionError(
                f"layer gradient {grad.shape} does not match operator size {op.size}"
            )

    total = np.array(grad_layers[-1], dtype=np.float64, copy=True)
    for grad in reversed(grad_layers[:-1]):
        total = grad + np.asarray(op.adjoint @ total)
    return total
