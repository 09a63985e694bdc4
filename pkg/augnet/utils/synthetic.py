"""Seeded synthetic attributed graphs for tests, self-checks and demos."""

from typing import Tuple

import numpy as np
import scipy.sparse as sp

from augnet.models.graph import AttributedGraph, adjacency_from_edges
from augnet.utils.seeding import derive_rng


def _block_edges(
    blocks: np.ndarray, p_in: float, p_cross: float, rng: np.random.Generator
) -> np.ndarray:
    n = blocks.shape[0]
    rows, cols = np.triu_indices(n, k=1)
    same = blocks[rows] == blocks[cols]
    keep = rng.random(rows.shape[0]) < np.where(same, p_in, p_cross)
    return np.column_stack([rows[keep], cols[keep]])


def two_block_graph(
    n_per_block: int = 20,
    p_in: float = 0.4,
    p_cross: float = 0.02,
    seed: int = 0,
) -> AttributedGraph:
    """Two communities with one block-indicator attribute each; labels are the block."""
    rng = derive_rng(seed, "synthetic", 0)
    blocks = np.repeat([0, 1], n_per_block)
    n = blocks.shape[0]
    features = sp.csr_matrix(
        (np.ones(n), (np.arange(n), blocks)), shape=(n, 2), dtype=np.float64
    )
    return AttributedGraph(
        adjacency=adjacency_from_edges(_block_edges(blocks, p_in, p_cross, rng), n),
        features=features,
        labels=blocks.astype(np.int64),
    )


def continuous_block_graph(
    n_per_block: int = 20,
    informative_per_block: int = 2,
    noise_features: int = 4,
    p_in: float = 0.4,
    p_cross: float = 0.02,
    seed: int = 0,
) -> AttributedGraph:
    """Two communities with real-valued features.

    Each node carries large values on its own block's informative columns and
    small values on every noise column, so the informative entries are always
    the largest in a row.
    """
    rng = derive_rng(seed, "synthetic", 1)
    blocks = np.repeat([0, 1], n_per_block)
    n = blocks.shape[0]
    m = 2 * informative_per_block + noise_features

    dense = np.zeros((n, m))
    for block in (0, 1):
        members = blocks == block
        start = block * informative_per_block
        columns = slice(start, start + informative_per_block)
        dense[members, columns] = 1.0 + 0.5 * rng.random((members.sum(), informative_per_block))
    dense[:, 2 * informative_per_block :] = 0.05 + 0.25 * rng.random((n, noise_features))

    return AttributedGraph(
        adjacency=adjacency_from_edges(_block_edges(blocks, p_in, p_cross, rng), n),
        features=sp.csr_matrix(dense),
        labels=blocks.astype(np.int64),
    )


def random_attributed_graph(
    n: int,
    m: int,
    p_edge: float = 0.2,
    p_feature: float = 0.3,
    seed: int = 0,
    signed: bool = False,
) -> AttributedGraph:
    """Erdos-Renyi structure with random sparse features (optionally of both signs)."""
    rng = derive_rng(seed, "synthetic", 2, n, m)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.shape[0]) < p_edge
    edges = np.column_stack([rows[keep], cols[keep]])

    mask = rng.random((n, m)) < p_feature
    values = rng.uniform(0.1, 1.0, size=(n, m))
    if signed:
        values *= rng.choice([-1.0, 1.0], size=(n, m))
    return AttributedGraph(
        adjacency=adjacency_from_edges(edges, n),
        features=sp.csr_matrix(np.where(mask, values, 0.0)),
    )


TOY_EDGES: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 4), (3, 5))
TOY_FEATURES: Tuple[Tuple[int, int], ...] = (
    (0, 0), (0, 1), (1, 0), (3, 1), (3, 2), (2, 2), (4, 3), (5, 3),
)


def toy_graph() -> AttributedGraph:
    """Six nodes and four attribute categories.

    Node 0 is linked to nodes 1, 2, 3 and carries categories 0 and 1, so its
    first-order augmented neighbors are nodes 1, 2, 3 and entities 6, 7.
    """
    n, m = 6, 4
    rows, cols = zip(*TOY_FEATURES)
    features = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, m), dtype=np.float64
    )
    return AttributedGraph(
        adjacency=adjacency_from_edges(np.array(TOY_EDGES), n), features=features
    )
