"""Finite-difference verification of every hand-written backward pass."""

import logging
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from augnet.engine import propagate, scorer, training
from augnet.engine.augment import build_transition
from augnet.models.config import TrainConfig, Variant
from augnet.utils.seeding import derive_rng
from augnet.utils.synthetic import random_attributed_graph

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-4
STEP = 1e-6

SUITES = ("propagate", "scorer", "pair_loss", "minibatch")


class GradCheckResult(BaseModel):
    """Worst relative error of one parameter over all instances of a suite."""

    suite: str
    parameter: str
    max_rel_error: float = Field(ge=0.0)
    instances: int = Field(ge=0)


class GradCheckReport(BaseModel):
    """Results of every suite against one threshold."""

    threshold: float
    results: List[GradCheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.max_rel_error < self.threshold for r in self.results)

    @property
    def failures(self) -> List[GradCheckResult]:
        return [r for r in self.results if r.max_rel_error >= self.threshold]

    @property
    def max_rel_error(self) -> float:
        return max((r.max_rel_error for r in self.results), default=0.0)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / max(|a|, |n|, 1e-10)`` over whole arrays."""
    diff = float(np.linalg.norm(np.ravel(analytic) - np.ravel(numeric)))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-10)
    return diff / scale


def numeric_gradient(func: Callable[[], float], x: np.ndarray, h: float = STEP) -> np.ndarray:
    """Central differences of ``func`` w.r.t. ``x``, which is perturbed in place and restored."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        original = x.flat[i]
        x.flat[i] = original + h
        plus = func()
        x.flat[i] = original - h
        minus = func()
        x.flat[i] = original
        grad.flat[i] = (plus - minus) / (2.0 * h)
    return grad


def _instance_shape(
    rng: np.random.Generator, dim: Optional[int], k: Optional[int]
) -> Dict[str, int]:
    return {
        "n": int(rng.integers(4, 13)),
        "m": int(rng.integers(1, 6)),
        "dim": dim if dim is not None else int(rng.integers(2, 7)),
        "k": k if k is not None else int(rng.integers(1, 3)),
    }


def check_propagate(rng: np.random.Generator, dim: Optional[int], k: Optional[int]) -> Dict[str, float]:
    """Adjoint of K-step propagation against ``sum_k <W_k, H^(k)>``."""
    shape = _instance_shape(rng, dim, k)
    graph = random_attributed_graph(
        shape["n"], shape["m"], seed=int(rng.integers(2**31)), signed=True
    )
    op = build_transition(graph.adjacency, graph.features, float(rng.uniform(0.0, 1.0)))
    base = rng.normal(size=(op.size, shape["dim"]))
    weights = [rng.normal(size=base.shape) for _ in range(shape["k"] + 1)]

    def loss() -> float:
        stack = propagate.forward(op, base, shape["k"])
        return float(sum(np.sum(w * layer) for w, layer in zip(weights, stack.layers)))

    analytic = propagate.backward(op, weights)
    return {"base": relative_error(analytic, numeric_gradient(loss, base))}


def check_scorer(rng: np.random.Generator, dim: Optional[int], k: Optional[int]) -> Dict[str, float]:
    """MLP parameter and input gradients against ``sum(u * logits)``."""
    shape = _instance_shape(rng, dim, k)
    params = scorer.init_scorer_params(shape["k"], shape["dim"], rng)
    params.b1[:] = rng.normal(scale=0.1, size=params.b1.shape)
    params.b2[:] = rng.normal(scale=0.1, size=params.b2.shape)
    batch = int(rng.integers(1, 6))
    features = rng.normal(size=(batch, params.input_width))
    upstream = rng.normal(size=batch)

    def loss() -> float:
        logits, _ = scorer.score_batch(params, features)
        return float(np.dot(upstream, logits))

    _, cache = scorer.score_batch(params, features)
    grads, d_features = scorer.scorer_backward(params, cache, upstream)
    errors = {
        name: relative_error(grads[name], numeric_gradient(loss, array))
        for name, array in params.arrays().items()
    }
    errors["features"] = relative_error(d_features, numeric_gradient(loss, features))
    return errors


def check_pair_loss(rng: np.random.Generator, dim: Optional[int], k: Optional[int]) -> Dict[str, float]:
    """Derivatives of the negative-sampling loss w.r.t. every logit."""
    logits = rng.normal(scale=3.0, size=1 + int(rng.integers(1, 6)))

    def loss() -> float:
        return training.pair_loss(float(logits[0]), list(logits[1:]))[0]

    _, d_pos, d_neg = training.pair_loss(float(logits[0]), list(logits[1:]))
    analytic = np.concatenate([[d_pos], d_neg])
    return {"logits": relative_error(analytic, numeric_gradient(loss, logits))}


def check_minibatch(
    rng: np.random.Generator, dim: Optional[int], k: Optional[int], instance: int = 0
) -> Dict[str, float]:
    """End-to-end minibatch loss gradient w.r.t. base embeddings and every head."""
    shape = _instance_shape(rng, dim, k)
    graph = random_attributed_graph(shape["n"], shape["m"], seed=int(rng.integers(2**31)))
    variants = [
        {"variant": Variant.FULL},
        {"variant": Variant.FULL, "separate_heads": True},
        {"variant": Variant.INNER},
    ]
    config = TrainConfig(
        dim=shape["dim"],
        k=shape["k"],
        alpha=float(rng.uniform(0.0, 1.0)),
        topn=None,
        **variants[instance % len(variants)],
    )
    op, _ = training.prepare_operators(graph, config)
    state = training.init_state(op.size, config)
    state.base[:] = rng.normal(scale=0.5, size=state.base.shape)

    batch, num_neg = int(rng.integers(2, 6)), int(rng.integers(1, 4))
    anchors = rng.integers(0, op.size, size=batch)
    positives = rng.integers(0, op.size, size=batch)
    negatives = rng.integers(0, op.size, size=(batch, num_neg))

    def loss() -> float:
        return training.batch_loss_and_grads(state, op, anchors, positives, negatives, config)[0]

    _, grads = training.batch_loss_and_grads(state, op, anchors, positives, negatives, config)
    return {
        name: relative_error(grads[name], numeric_gradient(loss, array))
        for name, array in state.parameters().items()
    }


def run_gradcheck(
    instances: int = 20,
    seed: int = 0,
    dim: Optional[int] = None,
    k: Optional[int] = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> GradCheckReport:
    """Run every suite on ``instances`` seeded random problems.

    Args:
        instances: Random instances per suite
        seed: Root seed
        dim: Fixed embedding width (random in [2, 6] if None)
        k: Fixed propagation depth (random in [1, 2] if None)
        threshold: Relative error that counts as a failure

    Returns:
        GradCheckReport with the worst error per suite and parameter
    """
    report = GradCheckReport(threshold=threshold)
    for suite_index, suite in enumerate(SUITES):
        worst: Dict[str, float] = {}
        for instance in range(instances):
            rng = derive_rng(seed, "gradcheck", suite_index, instance)
            if suite == "propagate":
                errors = check_propagate(rng, dim, k)
            elif suite == "scorer":
                errors = check_scorer(rng, dim, k)
            elif suite == "pair_loss":
                errors = check_pair_loss(rng, dim, k)
            else:
                errors = check_minibatch(rng, dim, k, instance)
            for name, error in errors.items():
                worst[name] = max(worst.get(name, 0.0), error)

        for name, error in worst.items():
            report.results.append(
                GradCheckResult(suite=suite, parameter=name, max_rel_error=error, instances=instances)
            )
        logger.info(f"Gradient suite '{suite}': max relative error {max(worst.values()):.2e}")

    for failure in report.failures:
        logger.error(
            f"Gradient check failed for {failure.suite}/{failure.parameter}: "
            f"{failure.max_rel_error:.2e} >= {threshold:.0e}"
        )
    return report
