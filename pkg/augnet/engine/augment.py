"""Augmented node/attribute-category graph, transition operator and binary targets.

Entity ids: nodes are ``0..n-1``, attribute category ``j`` is ``n + j``.
"""

import logging
from pathlib import Path
from typing import Set, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from augnet.errors import BoundsError, ConfigurationError, DimensionError
from augnet.models.graph import AttributedGraph

logger = logging.getLogger(__name__)


class AugmentedOperator(BaseModel):
    """Row-mixed transition matrix over nodes and attribute categories."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(ge=0, description="Node count")
    m: int = Field(ge=0, description="Attribute-category count")
    alpha: float = Field(ge=0.0, le=1.0, description="Structure/attribute trade-off")
    transition: sp.csr_matrix = Field(description="(n+m) x (n+m) operator")
    adjoint: sp.csr_matrix = Field(description="Transpose of the operator, cached")

    @property
    def size(self) -> int:
        return self.n + self.m


class BinaryTargets(BaseModel):
    """Binary links to reconstruct: node-node edges and positive node attributes."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    m: int
    positives: sp.csr_matrix = Field(description="Symmetric binary (n+m)^2 matrix")

    def neighbors(self, entity: int) -> np.ndarray:
        """Sorted positive neighbors of ``entity``."""
        indptr, indices = self.positives.indptr, self.positives.indices
        return indices[indptr[entity] : indptr[entity + 1]]

    def pairs(self) -> np.ndarray:
        """All directed (anchor, positive) pairs in row-major order."""
        coo = self.positives.tocoo()
        pairs = np.column_stack([coo.row, coo.col]).astype(np.int64)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def topn_sparsify(features: sp.csr_matrix, topn: int) -> sp.csr_matrix:
    """Keep the ``topn`` largest stored values of each row.

    Values are compared by sign, not magnitude. Ties at the cut keep the
    lowest column index first. Rows with at most ``topn`` entries are
    returned unchanged.

    Args:
        features: n x m feature matrix
        topn: Entries to keep per row

    Returns:
        Sparsified CSR matrix of the same shape

    Raises:
        ConfigurationError: If ``topn`` < 1
    """
    if topn < 1:
        raise ConfigurationError(f"top-N must be at least 1, got {topn}")

    features = sp.csr_matrix(features)
    features.sort_indices()
    row_lengths = np.diff(features.indptr)
    if not np.any(row_lengths > topn):
        return features.copy()

    rows, cols, values = [], [], []
    for row in range(features.shape[0]):
        start, end = features.indptr[row], features.indptr[row + 1]
        row_cols = features.indices[start:end]
        row_vals = features.data[start:end]
        if end - start > topn:
            # Primary key: value descending; secondary: column ascending
            keep = np.lexsort((row_cols, -row_vals))[:topn]
            row_cols, row_vals = row_cols[keep], row_vals[keep]
        rows.append(np.full(row_cols.shape[0], row, dtype=np.int64))
        cols.append(row_cols)
        values.append(row_vals)

    result = sp.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=features.shape,
    )
    result.sort_indices()
    return result


def build_augmented(adjacency: sp.spmatrix, features: sp.spmatrix) -> sp.csr_matrix:
    """Weighted augmented adjacency ``[[A, X], [X^T, 0]]``."""
    n = adjacency.shape[0]
    if adjacency.shape != (n, n) or features.shape[0] != n:
        raise DimensionError(
            f"adjacency {adjacency.shape} and features {features.shape} disagree"
        )
    m = features.shape[1]
    features = sp.csr_matrix(features)
    augmented = _assemble_blocks(
        sp.csr_matrix(adjacency), features, features.T, sp.csr_matrix((m, m))
    )
    augmented.eliminate_zeros()
    augmented.sort_indices()
    return sp.csr_matrix(augmented)


def _assemble_blocks(
    top_left: sp.spmatrix,
    top_right: sp.spmatrix,
    bottom_left: sp.spmatrix,
    bottom_right: sp.spmatrix,
) -> sp.csr_matrix:
    """Stack a 2x2 block matrix; an empty attribute side yields the node block alone."""
    if top_right.shape[1] == 0:
        return sp.csr_matrix(top_left, dtype=np.float64)
    stacked = sp.bmat(
        [[top_left, top_right], [bottom_left, bottom_right]], format="csr"
    )
    return sp.csr_matrix(stacked, dtype=np.float64)


def row_l1_normalize(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Divide each row by its sum of absolute values; signs are kept, zero rows stay zero."""
    matrix = sp.csr_matrix(matrix, dtype=np.float64)
    norms = np.asarray(abs(matrix).sum(axis=1)).ravel()
    scale = np.zeros_like(norms)
    np.divide(1.0, norms, out=scale, where=norms > 0)
    return sp.csr_matrix(sp.diags(scale) @ matrix)


def build_transition(
    adjacency: sp.spmatrix, features: sp.spmatrix, alpha: float
) -> AugmentedOperator:
    """Build the mixed transition operator.

    Blocks: ``[[a*A~, (1-a)*X~], [(1-a)*X~^T, a*I]]`` where ``A~`` is the
    l1-row-normalized ``A + I`` and ``X~`` the l1-row-normalized ``X``.
    Attribute rows are not renormalized.

    Args:
        adjacency: n x n binary adjacency
        features: n x m feature matrix
        alpha: Trade-off weight in [0, 1]

    Returns:
        AugmentedOperator
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    n = adjacency.shape[0]
    if adjacency.shape != (n, n) or features.shape[0] != n:
        raise DimensionError(
            f"adjacency {adjacency.shape} and features {features.shape} disagree"
        )
    m = features.shape[1]

    a_norm = row_l1_normalize(sp.csr_matrix(adjacency) + sp.identity(n, format="csr"))
    x_norm = row_l1_normalize(features)

    transition = _assemble_blocks(
        alpha * a_norm,
        (1.0 - alpha) * x_norm,
        (1.0 - alpha) * x_norm.T,
        alpha * sp.identity(m, format="csr"),
    )
    transition.eliminate_zeros()
    transition.sort_indices()

    adjoint = sp.csr_matrix(transition.T)
    adjoint.sort_indices()

    logger.debug(
        f"Built transition operator of size {n + m} with alpha={alpha}, "
        f"{transition.nnz} stored entries"
    )
    return AugmentedOperator(
        n=n, m=m, alpha=alpha, transition=transition, adjoint=adjoint
    )


def build_binary_targets(
    adjacency: sp.spmatrix, features: sp.spmatrix
) -> BinaryTargets:
    """Binary reconstruction targets; only strictly positive features become links."""
    n = adjacency.shape[0]
    if adjacency.shape != (n, n) or features.shape[0] != n:
        raise DimensionError(
            f"adjacency {adjacency.shape} and features {features.shape} disagree"
        )
    m = features.shape[1]

    positive_features = sp.csr_matrix(features > 0, dtype=np.float64)
    binary_adjacency = sp.csr_matrix(adjacency != 0, dtype=np.float64)
    positives = build_augmented(binary_adjacency, positive_features)
    positives.data[:] = 1.0
    return BinaryTargets(n=n, m=m, positives=positives)


def structure_pattern(graph: AttributedGraph) -> sp.csr_matrix:
    """Unweighted augmented structure: entries of ``A`` plus nonzero features."""
    pattern = build_augmented(
        graph.adjacency, sp.csr_matrix(graph.features != 0, dtype=np.float64)
    )
    pattern.data[:] = 1.0
    return pattern


def _check_entity(graph: AttributedGraph, entity: int) -> None:
    if not 0 <= entity < graph.n + graph.m:
        raise BoundsError(
            f"entity {entity} out of range for n={graph.n}, m={graph.m}"
        )


def neighbors_order1(graph: AttributedGraph, entity: int) -> Set[int]:
    """First-order augmented neighbors.

    A node reaches its graph neighbors and every attribute category with a
    nonzero value; an attribute category reaches every node that carries it.
    """
    _check_entity(graph, entity)
    n = graph.n
    if entity < n:
        adj = graph.adjacency
        feats = graph.features
        nodes = adj.indices[adj.indptr[entity] : adj.indptr[entity + 1]]
        start, end = feats.indptr[entity], feats.indptr[entity + 1]
        attrs = feats.indices[start:end][feats.data[start:end] != 0]
        return {int(u) for u in nodes} | {n + int(j) for j in attrs}

    column = graph.features.getcol(entity - n).tocoo()
    return {int(u) for u, value in zip(column.row, column.data) if value != 0}


def neighbors_order2(graph: AttributedGraph, entity: int) -> Set[int]:
    """Entities reachable by exactly two steps over the unweighted augmented graph.

    Brute-force path enumeration used as a reference for the matrix form.
    """
    reached: Set[int] = set()
    for middle in neighbors_order1(graph, entity):
        reached |= neighbors_order1(graph, middle)
    return reached


def neighbors_order2_sparse(graph: AttributedGraph, entity: int) -> Set[int]:
    """Second-order neighbors from the squared structure pattern."""
    _check_entity(graph, entity)
    pattern = structure_pattern(graph)
    row = (pattern[entity] @ pattern).tocsr()
    return {int(j) for j, value in zip(row.indices, row.data) if value > 0}


def dump_operator(op: AugmentedOperator, path: Union[str, Path]) -> Path:
    """Write the transition matrix as ``row<TAB>col<TAB>value`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = op.transition.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with path.open("w") as handle:
        handle.write(f"#n={op.n} m={op.m} alpha={op.alpha}\n")
        for idx in order:
            handle.write(f"{coo.row[idx]}\t{coo.col[idx]}\t{coo.data[idx]!r}\n")
    logger.info(f"Wrote {coo.nnz} operator entries to {path}")
    return path
