"""Data models for attributed networks and link-prediction edge splits."""

from typing import Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator


class AttributedGraph(BaseModel):
    """Undirected graph with a sparse signed node-by-attribute-category matrix.

    Entities share one index space: nodes are ``0..n-1`` and attribute
    category ``j`` is ``n + j``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    adjacency: sp.csr_matrix = Field(
        description="Symmetric binary n x n adjacency, no diagonal entries"
    )
    features: sp.csr_matrix = Field(
        description="n x m matrix of real (possibly negative) attribute values"
    )
    labels: Optional[np.ndarray] = Field(
        None, description="Per-node class id, -1 for unlabeled nodes"
    )

    @model_validator(mode="after")
    def _check_invariants(self) -> "AttributedGraph":
        adj = self.adjacency
        if adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got {adj.shape}")
        if self.features.shape[0] != adj.shape[0]:
            raise ValueError(
                f"features have {self.features.shape[0]} rows for {adj.shape[0]} nodes"
            )
        if adj.nnz:
            if np.any(adj.diagonal() != 0):
                raise ValueError("adjacency must not store self-loops")
            if np.any(adj.data != 1):
                raise ValueError("adjacency values must all equal 1")
            if (adj != adj.T).nnz:
                raise ValueError("adjacency must be symmetric")
        if self.labels is not None and self.labels.shape != (adj.shape[0],):
            raise ValueError("labels must have one entry per node")
        return self

    @property
    def n(self) -> int:
        """Node count."""
        return int(self.adjacency.shape[0])

    @property
    def m(self) -> int:
        """Attribute-category count."""
        return int(self.features.shape[1])

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return int(self.adjacency.nnz // 2)

    def edge_list(self) -> np.ndarray:
        """Canonical (min, max) undirected edges as a (E, 2) array, sorted."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        edges = np.column_stack([upper.row, upper.col]).astype(np.int64)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        return edges[order]

    def with_edges(self, edges: np.ndarray) -> "AttributedGraph":
        """Return a graph over the same nodes with ``edges`` as its edge set."""
        return AttributedGraph(
            adjacency=adjacency_from_edges(edges, self.n),
            features=self.features,
            labels=self.labels,
        )

    def with_features(self, features: sp.csr_matrix) -> "AttributedGraph":
        """Return a graph with the same edges and a replaced feature matrix."""
        return AttributedGraph(
            adjacency=self.adjacency, features=features, labels=self.labels
        )


class EdgeSplit(BaseModel):
    """Train/validation/test partition of an undirected edge set."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    train_graph: AttributedGraph = Field(
        description="Input graph with validation and test edges removed"
    )
    val_pos: np.ndarray = Field(description="Held-out validation edges (k, 2)")
    val_neg: np.ndarray = Field(description="Validation non-edges, same size")
    test_pos: np.ndarray = Field(description="Held-out test edges (k, 2)")
    test_neg: np.ndarray = Field(description="Test non-edges, same size")


def adjacency_from_edges(edges: np.ndarray, n: int) -> sp.csr_matrix:
    """Build a symmetric binary CSR adjacency from undirected pairs."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix(
        (np.ones(rows.shape[0], dtype=np.float64), (rows, cols)), shape=(n, n)
    )
    # Duplicates collapse to a single entry
    adj.data[:] = 1.0
    adj.sort_indices()
    return adj
