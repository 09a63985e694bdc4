"""Negative-sampled collaborative objective, gradient assembly and the training loop."""

import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from augnet.data.loader import split_edges
from augnet.engine import propagate, scorer
from augnet.engine.augment import (
    AugmentedOperator,
    BinaryTargets,
    build_binary_targets,
    build_transition,
    topn_sparsify,
)
from augnet.engine.optim import Adam
from augnet.engine.scorer import ScorerParams
from augnet.errors import ConfigurationError, SamplingError
from augnet.eval.metrics import auc, average_precision
from augnet.models.config import TrainConfig
from augnet.models.graph import AttributedGraph, EdgeSplit
from augnet.models.report import EpochMetrics
from augnet.utils.seeding import derive_rng, derive_seed

logger = logging.getLogger(__name__)

SHARED_HEAD = "shared"
NODE_HEAD = "node"
ATTRIBUTE_HEAD = "attr"


class TrainState(BaseModel):
    """Trainable parameters, optimizer moments and early-stopping bookkeeping."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base: np.ndarray = Field(description="Trainable (n+m) x d base embeddings")
    heads: Dict[str, ScorerParams] = Field(
        default_factory=dict, description="Scorer MLPs; empty for the inner variant"
    )
    optimizer: Adam
    best_val_ap: float = float("-inf")
    best_epoch: int = 0
    epochs_since_best: int = 0

    @property
    def step(self) -> int:
        return self.optimizer.step_count

    def parameters(self) -> Dict[str, np.ndarray]:
        """All trainable arrays by name, e.g. ``base`` and ``shared.w1``."""
        params = {"base": self.base}
        for head_name, head in self.heads.items():
            for name, array in head.arrays().items():
                params[f"{head_name}.{name}"] = array
        return params

    def snapshot(self) -> "TrainState":
        """Deep copy of the whole state."""
        return TrainState(
            base=self.base.copy(),
            heads={name: head.copy() for name, head in self.heads.items()},
            optimizer=self.optimizer.state_copy(),
            best_val_ap=self.best_val_ap,
            best_epoch=self.best_epoch,
            epochs_since_best=self.epochs_since_best,
        )


class TrainResult(BaseModel):
    """Best-validation state with everything needed to score and export it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    state: TrainState
    history: List[EpochMetrics]
    config: TrainConfig
    split: EdgeSplit
    operator: AugmentedOperator
    targets: BinaryTargets

    @property
    def best_epoch(self) -> int:
        return self.state.best_epoch

    def stack(self) -> propagate.LayerStack:
        return propagate.forward(self.operator, self.state.base, self.config.k)

    def node_embeddings(self) -> np.ndarray:
        """Final-layer node rows."""
        return self.stack().final_node_embeddings(self.operator.n)


class NegativeSampler:
    """Uniform rejection sampler that avoids each anchor and its positive links."""

    def __init__(self, targets: BinaryTargets):
        self.targets = targets
        self.size = targets.n + targets.m
        positives = targets.positives
        rows = np.repeat(np.arange(self.size, dtype=np.int64), np.diff(positives.indptr))
        # Row-major CSR with sorted indices gives sorted keys
        self.keys = rows * self.size + positives.indices.astype(np.int64)

    def available(self, anchors: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
        """Number of valid negatives for each anchor within its ``[low, high)`` pool."""
        anchors = np.asarray(anchors, dtype=np.int64)
        low = np.broadcast_to(np.asarray(low, dtype=np.int64), anchors.shape)
        high = np.broadcast_to(np.asarray(high, dtype=np.int64), anchors.shape)
        unique, inverse = np.unique(
            np.column_stack([anchors, low, high]), axis=0, return_inverse=True
        )
        counts = (unique[:, 2] - unique[:, 1]) - self._invalid_counts(
            unique[:, 0], unique[:, 1], unique[:, 2]
        )
        return counts[inverse.reshape(-1)]

    def _invalid_counts(self, anchors: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
        positives = self.targets.positives
        counts = np.zeros(anchors.shape[0], dtype=np.int64)
        for idx, (anchor, lo, hi) in enumerate(zip(anchors, low, high)):
            neighbors = positives.indices[positives.indptr[anchor] : positives.indptr[anchor + 1]]
            counts[idx] = np.count_nonzero((neighbors >= lo) & (neighbors < hi))
            counts[idx] += int(lo <= anchor < hi)
        return counts

    def sample(
        self,
        anchors: np.ndarray,
        low: np.ndarray,
        high: np.ndarray,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """One negative per anchor, drawn uniformly from ``[low, high)``.

        Raises:
            SamplingError: If some anchor has no valid negative in its pool
        """
        anchors = np.asarray(anchors, dtype=np.int64)
        low = np.broadcast_to(np.asarray(low, dtype=np.int64), anchors.shape)
        high = np.broadcast_to(np.asarray(high, dtype=np.int64), anchors.shape)

        valid = self.available(anchors, low, high)
        if np.any(valid <= 0):
            anchor = int(anchors[np.argmax(valid <= 0)])
            raise SamplingError(f"entity {anchor} has no valid negative to sample")

        result = np.empty(anchors.shape[0], dtype=np.int64)
        pending = np.arange(anchors.shape[0])
        while pending.size:
            span = high[pending] - low[pending]
            candidates = low[pending] + (rng.random(pending.size) * span).astype(np.int64)
            keys = anchors[pending] * self.size + candidates
            slot = np.searchsorted(self.keys, keys)
            hit = (slot < self.keys.size) & (self.keys[np.minimum(slot, self.keys.size - 1)] == keys)
            rejected = hit | (candidates == anchors[pending])
            result[pending[~rejected]] = candidates[~rejected]
            pending = pending[rejected]
        return result


def sample_negatives(
    anchors: np.ndarray,
    targets: BinaryTargets,
    rng: np.random.Generator,
    low: int = 0,
    high: Optional[int] = None,
    sampler: Optional[NegativeSampler] = None,
) -> np.ndarray:
    """One uniform negative per anchor over ``[low, high)`` (default: every entity).

    Pass ``sampler`` to reuse its positive-key index across calls on the same targets.
    """
    if high is None:
        high = targets.n + targets.m
    if sampler is None:
        sampler = NegativeSampler(targets)
    return sampler.sample(np.asarray(anchors), low, high, rng)


def sample_negative(
    anchor: int,
    targets: BinaryTargets,
    rng: np.random.Generator,
    low: int = 0,
    high: Optional[int] = None,
    sampler: Optional[NegativeSampler] = None,
) -> int:
    """Uniform negative for ``anchor``, never the anchor or one of its positives."""
    return int(sample_negatives(np.array([anchor]), targets, rng, low, high, sampler)[0])


def pair_loss(pos_logit: float, neg_logits: List[float]) -> Tuple[float, float, np.ndarray]:
    """Logistic negative-sampling loss ``-log s(pos) - sum log s(-neg)`` and its derivatives."""
    if len(neg_logits) < 1:
        raise ConfigurationError("pair_loss needs at least one negative")
    losses, d_pos, d_neg = pair_loss_batch(
        np.array([pos_logit], dtype=np.float64),
        np.asarray(neg_logits, dtype=np.float64).reshape(1, -1),
    )
    return float(losses[0]), float(d_pos[0]), d_neg[0]


def pair_loss_batch(
    pos_logits: np.ndarray, neg_logits: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise loss for (B,) positives against (B, Q) negatives."""
    # -log sigmoid(x) == logaddexp(0, -x) without overflow
    losses = np.logaddexp(0.0, -pos_logits) + np.logaddexp(0.0, neg_logits).sum(axis=1)
    d_pos = -expit(-pos_logits)
    d_neg = expit(neg_logits)
    return losses, d_pos, d_neg


def prepare_operators(
    graph: AttributedGraph, config: TrainConfig
) -> Tuple[AugmentedOperator, BinaryTargets]:
    """Sparsify features (if configured) and build the operator and targets."""
    features = graph.features
    if config.topn is not None:
        features = topn_sparsify(features, config.topn)
    op = build_transition(graph.adjacency, features, config.effective_alpha)
    targets = build_binary_targets(graph.adjacency, features)
    return op, targets


def init_state(size: int, config: TrainConfig) -> TrainState:
    """Fresh parameters for ``size`` entities."""
    base = propagate.init_embeddings(size, config.dim, derive_rng(config.seed, "init"))
    heads: Dict[str, ScorerParams] = {}
    if config.uses_mlp:
        names = [NODE_HEAD, ATTRIBUTE_HEAD] if config.separate_heads else [SHARED_HEAD]
        for index, name in enumerate(names):
            heads[name] = scorer.init_scorer_params(
                config.k, config.dim, derive_rng(config.seed, "scorer", index)
            )
    return TrainState(base=base, heads=heads, optimizer=Adam(config.lr))


def training_pairs(targets: BinaryTargets, config: TrainConfig) -> np.ndarray:
    """Directed (anchor, positive) pairs that enter the loss."""
    pairs = targets.pairs()
    if not config.uses_attribute_positives:
        pairs = pairs[(pairs[:, 0] < targets.n) & (pairs[:, 1] < targets.n)]
    return pairs


def negative_pools(
    positives: np.ndarray, n: int, size: int, config: TrainConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pair sampling range ``[low, high)`` for negatives."""
    low = np.zeros(positives.shape[0], dtype=np.int64)
    high = np.full(positives.shape[0], size, dtype=np.int64)
    if not config.uses_attribute_positives:
        high[:] = n
    elif config.same_type_negatives:
        is_attribute = positives >= n
        low[is_attribute] = n
        high[~is_attribute] = n
    return low, high


def widen_empty_pools(
    sampler: NegativeSampler, anchors: np.ndarray, low: np.ndarray, high: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Replace pools with no valid negative by the full entity range.

    Returns:
        The adjusted ``low`` and ``high`` and the number of widened pools
    """
    empty = sampler.available(anchors, low, high) <= 0
    if not np.any(empty):
        return low, high, 0
    low, high = low.copy(), high.copy()
    low[empty] = 0
    high[empty] = sampler.size
    return low, high, int(np.count_nonzero(empty))


def _head_masks(
    state: TrainState, a: np.ndarray, b: np.ndarray, n: int
) -> List[Tuple[str, np.ndarray]]:
    if SHARED_HEAD in state.heads:
        return [(SHARED_HEAD, np.ones(a.shape[0], dtype=bool))]
    involves_attribute = (a >= n) | (b >= n)
    return [(NODE_HEAD, ~involves_attribute), (ATTRIBUTE_HEAD, involves_attribute)]


def directed_logits(
    state: TrainState, stack: propagate.LayerStack, a: np.ndarray, b: np.ndarray, n: int
) -> np.ndarray:
    """Directed pair logits (MLP heads, or dot product when no head exists)."""
    if not state.heads:
        return scorer.inner_product_batch(stack, a, b)
    logits = np.zeros(a.shape[0])
    for head_name, mask in _head_masks(state, a, b, n):
        if mask.any():
            features = scorer.cross_features_batch(stack, a[mask], b[mask])
            logits[mask], _ = scorer.score_batch(state.heads[head_name], features)
    return logits


def score_pairs(
    state: TrainState,
    op: AugmentedOperator,
    pairs: np.ndarray,
    config: TrainConfig,
    stack: Optional[propagate.LayerStack] = None,
) -> np.ndarray:
    """Order-free scores for undirected evaluation pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if stack is None:
        stack = propagate.forward(op, state.base, config.k)
    a, b = pairs[:, 0], pairs[:, 1]
    forward_logits = directed_logits(state, stack, a, b, op.n)
    if not state.heads:
        return forward_logits
    return (forward_logits + directed_logits(state, stack, b, a, op.n)) / 2.0


def batch_loss_and_grads(
    state: TrainState,
    op: AugmentedOperator,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    config: TrainConfig,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean minibatch loss and exact gradients for fixed pairs and negatives.

    Args:
        state: Current parameters
        op: Transition operator
        anchors: (B,) anchor entities
        positives: (B,) positive partners
        negatives: (B, Q) sampled negatives
        config: Run configuration

    Returns:
        Mean loss over the batch and gradients keyed like ``state.parameters()``
    """
    batch, num_neg = negatives.shape
    stack = propagate.forward(op, state.base, config.k)

    a = np.concatenate([anchors, np.repeat(anchors, num_neg)])
    b = np.concatenate([positives, negatives.reshape(-1)])

    grad_layers = [np.zeros_like(layer) for layer in stack.layers]
    grads: Dict[str, np.ndarray] = {}

    if not state.heads:
        logits = scorer.inner_product_batch(stack, a, b)
        losses, d_pos, d_neg = pair_loss_batch(logits[:batch], logits[batch:].reshape(batch, num_neg))
        upstream = np.concatenate([d_pos, d_neg.reshape(-1)]) / batch
        scorer.inner_product_backward(stack, a, b, upstream, grad_layers)
    else:
        logits = np.zeros(a.shape[0])
        caches = {}
        for head_name, mask in _head_masks(state, a, b, op.n):
            if not mask.any():
                continue
            features = scorer.cross_features_batch(stack, a[mask], b[mask])
            logits[mask], caches[head_name] = scorer.score_batch(state.heads[head_name], features)

        losses, d_pos, d_neg = pair_loss_batch(logits[:batch], logits[batch:].reshape(batch, num_neg))
        upstream = np.concatenate([d_pos, d_neg.reshape(-1)]) / batch

        for head_name, mask in _head_masks(state, a, b, op.n):
            head = state.heads[head_name]
            if head_name not in caches:
                head_grads = {name: np.zeros_like(arr) for name, arr in head.arrays().items()}
            else:
                head_grads, d_features = scorer.scorer_backward(head, caches[head_name], upstream[mask])
                scorer.layer_grads_from_features(stack, a[mask], b[mask], d_features, grad_layers)
            for name, grad in head_grads.items():
                grads[f"{head_name}.{name}"] = grad

    grads["base"] = propagate.backward(op, grad_layers)
    return float(losses.mean()), grads


def epoch(
    state: TrainState,
    targets: BinaryTargets,
    op: AugmentedOperator,
    config: TrainConfig,
    epoch_index: int,
) -> Tuple[TrainState, float]:
    """One shuffled pass over every positive pair, one Adam step per minibatch.

    Returns:
        The updated state and the mean loss per positive pair
    """
    pairs = training_pairs(targets, config)
    if pairs.shape[0] == 0:
        logger.warning("No positive pairs to train on; epoch makes no updates")
        return state, 0.0

    order = derive_rng(config.seed, "shuffle", epoch_index).permutation(pairs.shape[0])
    pairs = pairs[order]
    negative_rng = derive_rng(config.seed, "negatives", epoch_index)
    sampler = NegativeSampler(targets)
    size = targets.n + targets.m

    total_loss = 0.0
    widened = 0
    for start in range(0, pairs.shape[0], config.batch_size):
        batch = pairs[start : start + config.batch_size]
        anchors, positives = batch[:, 0], batch[:, 1]
        low, high = negative_pools(positives, targets.n, size, config)
        if config.same_type_negatives:
            low, high, count = widen_empty_pools(sampler, anchors, low, high)
            widened += count
        q = config.negatives_per_positive
        negatives = sampler.sample(
            np.repeat(anchors, q), np.repeat(low, q), np.repeat(high, q), negative_rng
        ).reshape(-1, q)

        loss, grads = batch_loss_and_grads(state, op, anchors, positives, negatives, config)
        state.optimizer.step(state.parameters(), grads)
        total_loss += loss * batch.shape[0]

    if widened:
        logger.warning(
            "Epoch %d: %d pairs had no same-type negative and sampled from every entity",
            epoch_index,
            widened,
        )
    return state, total_loss / pairs.shape[0]


def validation_scores(
    state: TrainState, op: AugmentedOperator, split: EdgeSplit, config: TrainConfig
) -> Tuple[float, float]:
    """Validation AUC and AP."""
    stack = propagate.forward(op, state.base, config.k)
    pos = score_pairs(state, op, split.val_pos, config, stack)
    neg = score_pairs(state, op, split.val_neg, config, stack)
    return auc(pos, neg), average_precision(pos, neg, seed=derive_seed(config.seed, "eval"))


def train(
    graph: AttributedGraph,
    config: TrainConfig,
    split: Optional[EdgeSplit] = None,
    on_epoch: Optional[Callable[[EpochMetrics], None]] = None,
) -> TrainResult:
    """Train on ``graph`` with early stopping on validation AP.

    Args:
        graph: Full input graph
        config: Run configuration
        split: Precomputed split to share across runs; built from the seed if None
        on_epoch: Callback receiving each epoch's metrics

    Returns:
        TrainResult holding the best-validation snapshot
    """
    if split is None:
        train_frac, test_frac, val_frac = config.split_fractions()
        split = split_edges(graph, train_frac, test_frac, val_frac, seed=config.seed)

    op, targets = prepare_operators(split.train_graph, config)
    state = init_state(op.size, config)
    best = state.snapshot()
    history: List[EpochMetrics] = []

    logger.info(
        f"Training variant={config.variant.value} d={config.dim} K={config.k} "
        f"alpha={config.effective_alpha} on {op.n} nodes + {op.m} attributes"
    )

    for epoch_index in range(1, config.epochs + 1):
        started = time.perf_counter()
        state, loss = epoch(state, targets, op, config, epoch_index)
        val_auc, val_ap = validation_scores(state, op, split, config)
        metrics = EpochMetrics(
            epoch=epoch_index,
            loss=loss,
            val_auc=val_auc,
            val_ap=val_ap,
            seconds=time.perf_counter() - started,
        )
        history.append(metrics)
        if on_epoch is not None:
            on_epoch(metrics)
        logger.debug(f"Epoch {epoch_index}: loss={loss:.6f} val_ap={val_ap:.4f}")

        if val_ap > state.best_val_ap:
            state.best_val_ap = val_ap
            state.best_epoch = epoch_index
            state.epochs_since_best = 0
            best = state.snapshot()
        else:
            state.epochs_since_best += 1
            if state.epochs_since_best >= config.patience:
                logger.warning(
                    f"Early stopping at epoch {epoch_index}; best epoch {state.best_epoch}"
                )
                break

    logger.info(f"Best validation AP {best.best_val_ap:.4f} at epoch {best.best_epoch}")
    return TrainResult(
        state=best,
        history=history,
        config=config,
        split=split,
        operator=op,
        targets=targets,
    )
