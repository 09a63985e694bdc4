"""Cross-correlation pair scorer: layer-pair element-wise products fed to a 3-layer MLP."""

from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from augnet.engine.propagate import LayerStack
from augnet.errors import BoundsError, DimensionError

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


class ScorerParams(BaseModel):
    """MLP weights stored as (fan_in, fan_out); ReLU after the two hidden layers."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    w1: np.ndarray = Field(description="((K+1)^2 d, d)")
    b1: np.ndarray = Field(description="(d,)")
    w2: np.ndarray = Field(description="(d, d)")
    b2: np.ndarray = Field(description="(d,)")
    w3: np.ndarray = Field(description="(d, 1)")
    b3: np.ndarray = Field(description="(1,)")

    @property
    def input_width(self) -> int:
        return int(self.w1.shape[0])

    def arrays(self) -> Dict[str, np.ndarray]:
        """Parameter arrays by name; updates to them mutate the params in place."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ScorerParams":
        return ScorerParams(**{name: arr.copy() for name, arr in self.arrays().items()})


class ScorerCache(BaseModel):
    """Forward intermediates needed by the backward pass."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray


def init_scorer_params(k: int, dim: int, rng: np.random.Generator) -> ScorerParams:
    """Glorot-uniform weights, zero biases."""

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    width = (k + 1) ** 2 * dim
    return ScorerParams(
        w1=glorot(width, dim),
        b1=np.zeros(dim),
        w2=glorot(dim, dim),
        b2=np.zeros(dim),
        w3=glorot(dim, 1),
        b3=np.zeros(1),
    )


def _check_entities(stack: LayerStack, *entities: np.ndarray) -> None:
    size = stack.layers[0].shape[0]
    for ids in entities:
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= size):
            raise BoundsError(f"entity ids out of range for {size} entities")


def cross_features(stack: LayerStack, a: int, b: int) -> np.ndarray:
    """Concatenated ``h_a^(k) * h_b^(i)`` blocks in (k, i) lexicographic order."""
    return cross_features_batch(stack, np.array([a]), np.array([b]))[0]


def cross_features_batch(
    stack: LayerStack, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Batched cross features, shape (B, (K+1)^2 d)."""
    _check_entities(stack, a, b)
    rows_a = stack.rows(a)  # (K+1, B, d)
    rows_b = stack.rows(b)
    blocks = rows_a[:, None, :, :] * rows_b[None, :, :, :]  # (K+1, K+1, B, d)
    batch = rows_a.shape[1]
    return blocks.transpose(2, 0, 1, 3).reshape(batch, -1)


def score_batch(
    params: ScorerParams, features: np.ndarray
) -> Tuple[np.ndarray, ScorerCache]:
    """MLP logits for a (B, width) batch, plus the cache for backward."""
    features = np.atleast_2d(features)
    if features.shape[1] != params.input_width:
        raise DimensionError(
            f"feature width {features.shape[1]} != scorer input {params.input_width}"
        )
    z1 = features @ params.w1 + params.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params.w2 + params.b2
    a2 = np.maximum(z2, 0.0)
    logits = (a2 @ params.w3 + params.b3)[:, 0]
    return logits, ScorerCache(features=features, z1=z1, a1=a1, z2=z2, a2=a2)


def score(params: ScorerParams, features: np.ndarray) -> float:
    """Raw logit of a single feature vector."""
    if features.ndim != 1:
        raise DimensionError("score expects a single feature vector")
    logits, _ = score_batch(params, features[None, :])
    return float(logits[0])


def score_pair_symmetric(
    params: ScorerParams, stack: LayerStack, a: int, b: int
) -> float:
    """Order-free pair score: mean of the two directed logits."""
    forward_logit = score(params, cross_features(stack, a, b))
    reverse_logit = score(params, cross_features(stack, b, a))
    return (forward_logit + reverse_logit) / 2.0


def scorer_backward(
    params: ScorerParams, cache: ScorerCache, upstream: np.ndarray
) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """Exact gradients of ``sum(upstream * logits)``.

    Args:
        params: Scorer parameters used in the forward pass
        cache: Forward intermediates from ``score_batch``
        upstream: dLoss/dlogit per row, shape (B,)

    Returns:
        Parameter gradients by name and the (B, width) feature gradient
    """
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    grads: Dict[str, np.ndarray] = {}

    grads["w3"] = cache.a2.T @ upstream
    grads["b3"] = upstream.sum(axis=0)
    d_a2 = upstream @ params.w3.T
    # ReLU subgradient at 0 is 0
    d_z2 = d_a2 * (cache.z2 > 0)
    grads["w2"] = cache.a1.T @ d_z2
    grads["b2"] = d_z2.sum(axis=0)
    d_a1 = d_z2 @ params.w2.T
    d_z1 = d_a1 * (cache.z1 > 0)
    grads["w1"] = cache.features.T @ d_z1
    grads["b1"] = d_z1.sum(axis=0)
    d_features = d_z1 @ params.w1.T
    return grads, d_features


def layer_grads_from_features(
    stack: LayerStack,
    a: np.ndarray,
    b: np.ndarray,
    d_features: np.ndarray,
    grad_layers: list[np.ndarray],
) -> None:
    """Route feature gradients into both entities' layer rows (accumulates in place)."""
    k1 = stack.k + 1
    d = stack.d
    d_blocks = d_features.reshape(-1, k1, k1, d).transpose(1, 2, 0, 3)  # (K+1, K+1, B, d)
    rows_a = stack.rows(a)
    rows_b = stack.rows(b)
    d_rows_a = np.einsum("kibd,ibd->kbd", d_blocks, rows_b)
    d_rows_b = np.einsum("kibd,kbd->ibd", d_blocks, rows_a)
    for layer in range(k1):
        np.add.at(grad_layers[layer], a, d_rows_a[layer])
        np.add.at(grad_layers[layer], b, d_rows_b[layer])


def inner_product_batch(stack: LayerStack, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dot product of final-layer rows."""
    _check_entities(stack, a, b)
    final = stack.layers[-1]
    return np.einsum("bd,bd->b", final[a], final[b])


def inner_product_backward(
    stack: LayerStack,
    a: np.ndarray,
    b: np.ndarray,
    upstream: np.ndarray,
    grad_layers: list[np.ndarray],
) -> None:
    """Accumulate dot-product gradients into the final layer."""
    final = stack.layers[-1]
    upstream = np.asarray(upstream).reshape(-1, 1)
    np.add.at(grad_layers[-1], a, upstream * final[b])
    np.add.at(grad_layers[-1], b, upstream * final[a])
