"""Ranking metrics for link prediction."""

from typing import Sequence, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score

from augnet.errors import ConfigurationError


def _labelled(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ConfigurationError(
            f"need positive and negative scores, got {pos.size} and {neg.size}"
        )
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    return scores, labels


def auc(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> float:
    """Area under the ROC curve; tied pos/neg pairs count one half."""
    scores, labels = _labelled(pos_scores, neg_scores)
    return float(roc_auc_score(labels, scores))


def average_precision(
    pos_scores: Sequence[float], neg_scores: Sequence[float], seed: int = 0
) -> float:
    """Mean precision at the rank of each positive.

    Tied scores are ordered by a seeded shuffle followed by a stable sort,
    so the result does not depend on input order within a tie.

    Args:
        pos_scores: Scores of true links
        neg_scores: Scores of non-links
        seed: Seed of the tie-breaking shuffle

    Returns:
        Average precision in [0, 1]
    """
    scores, labels = _labelled(pos_scores, neg_scores)
    shuffle = np.random.default_rng(seed).permutation(scores.size)
    scores, labels = scores[shuffle], labels[shuffle]
    ranked = labels[np.argsort(-scores, kind="stable")]

    hits = np.cumsum(ranked)
    ranks = np.arange(1, ranked.size + 1)
    return float(np.mean((hits / ranks)[ranked == 1]))
