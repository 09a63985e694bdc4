"""K-fold node classification on exported embeddings."""

import logging
from typing import Iterator, Tuple

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score
from sklearn.model_selection import KFold, StratifiedKFold
from sklearn.multiclass import OneVsRestClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from augnet.errors import ConfigurationError, DimensionError
from augnet.utils.seeding import derive_seed

logger = logging.getLogger(__name__)


def _covers_all_classes(
    splits: Iterator[Tuple[np.ndarray, np.ndarray]], labels: np.ndarray, classes: np.ndarray
) -> Tuple[bool, list]:
    folds = list(splits)
    complete = all(np.array_equal(np.unique(labels[train]), classes) for train, _ in folds)
    return complete, folds


def classify(
    embeddings: np.ndarray, labels: np.ndarray, folds: int = 5, seed: int = 0
) -> Tuple[float, float]:
    """Cross-validated one-vs-rest logistic regression.

    Only nodes with a label >= 0 take part. Plain shuffled folds are tried
    first; if a training fold misses a class, stratified folds are used.

    Args:
        embeddings: n x d node embeddings
        labels: Length-n labels, -1 marks unlabeled nodes
        folds: Number of folds
        seed: Root seed

    Returns:
        (f1_micro, f1_macro) averaged over folds

    Raises:
        ConfigurationError: For fewer than two classes, too few labeled
            nodes, or folds that cannot cover every class
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if embeddings.ndim != 2 or embeddings.shape[0] != labels.shape[0]:
        raise DimensionError(
            f"embeddings {embeddings.shape} do not match {labels.shape[0]} labels"
        )

    labeled = labels >= 0
    features, targets = embeddings[labeled], labels[labeled]
    classes = np.unique(targets)
    if classes.size < 2:
        raise ConfigurationError(
            f"classification needs at least two classes, found {classes.size}"
        )
    if folds < 2 or targets.size < folds:
        raise ConfigurationError(
            f"cannot run {folds}-fold cross-validation on {targets.size} labeled nodes"
        )

    random_state = derive_seed(seed, "classify")
    complete, splits = _covers_all_classes(
        KFold(n_splits=folds, shuffle=True, random_state=random_state).split(features),
        targets,
        classes,
    )
    if not complete:
        logger.warning("A training fold misses a class; retrying with stratified folds")
        complete, splits = _covers_all_classes(
            StratifiedKFold(n_splits=folds, shuffle=True, random_state=random_state).split(
                features, targets
            ),
            targets,
            classes,
        )
        if not complete:
            raise ConfigurationError(
                "stratified folds still leave a class out of a training fold"
            )

    micro, macro = [], []
    for train_idx, test_idx in splits:
        model = make_pipeline(
            StandardScaler(),
            OneVsRestClassifier(LogisticRegression(max_iter=1000)),
        )
        model.fit(features[train_idx], targets[train_idx])
        predicted = model.predict(features[test_idx])
        micro.append(f1_score(targets[test_idx], predicted, average="micro"))
        macro.append(
            f1_score(targets[test_idx], predicted, average="macro", zero_division=0)
        )

    logger.info(f"{folds}-fold classification on {targets.size} nodes")
    return float(np.mean(micro)), float(np.mean(macro))
