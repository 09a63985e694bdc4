"""Loading, validating, splitting and perturbing attributed networks."""

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from augnet.errors import BoundsError, ConfigurationError, GraphParseError
from augnet.models.graph import AttributedGraph, EdgeSplit, adjacency_from_edges
from augnet.utils.seeding import derive_rng

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HEADER_PATTERN = re.compile(r"^#\s*n\s*=\s*(\d+)\s+m\s*=\s*(\d+)\s*$")
MIN_SPLIT_EDGES = 20


class GraphLoader:
    """Parser for the edge, feature and label text formats."""

    def __init__(self, n: Optional[int] = None, m: Optional[int] = None):
        """Initialize the loader.

        Args:
            n: Declared node count. Overridden by an edge-file header.
            m: Declared attribute-category count. Overridden by an edge-file header.
        """
        self.n = n
        self.m = m

    def load(
        self,
        edge_path: PathLike,
        feature_path: PathLike,
        label_path: Optional[PathLike] = None,
    ) -> AttributedGraph:
        """Load and validate an attributed graph.

        Args:
            edge_path: Edge file ("src<TAB>dst" per line)
            feature_path: Feature file with a "sparse" or "dense" header line
            label_path: Optional label file ("node<TAB>label" per line)

        Returns:
            AttributedGraph: Validated graph

        Raises:
            FileNotFoundError: If an input file does not exist
            GraphParseError: On a malformed line
            BoundsError: On an index outside the declared range
        """
        for path in (edge_path, feature_path, label_path):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"Input file not found: {path}")

        logger.info(f"Loading graph from {edge_path} and {feature_path}")

        edges, header = self._parse_edges(Path(edge_path))
        rows, cols, values, dense_shape = self._parse_features(Path(feature_path))
        labels = self._parse_labels(Path(label_path)) if label_path else {}

        # Resolve n and m: header, then declared values, else infer from the data
        declared_n, declared_m = header if header is not None else (self.n, self.m)
        n = declared_n
        if n is None:
            candidates = [0]
            if edges.size:
                candidates.append(int(edges.max()) + 1)
            if rows.size:
                candidates.append(int(rows.max()) + 1)
            if dense_shape is not None:
                candidates.append(dense_shape[0])
            if labels:
                candidates.append(max(labels) + 1)
            n = max(candidates)
        m = declared_m
        if m is None:
            if dense_shape is not None:
                m = dense_shape[1]
            else:
                m = int(cols.max()) + 1 if cols.size else 0

        self._check_bounds(edges, n, "node", edge_path)
        self._check_bounds(rows, n, "node", feature_path)
        self._check_bounds(cols, m, "attribute", feature_path)
        if dense_shape is not None and dense_shape != (n, m):
            raise BoundsError(
                f"{feature_path}: dense features are {dense_shape[0]}x{dense_shape[1]}, "
                f"expected {n}x{m}"
            )
        if labels and max(labels) >= n:
            raise BoundsError(f"{label_path}: label for node {max(labels)} >= n={n}")

        features = sp.csr_matrix((values, (rows, cols)), shape=(n, m))
        features.eliminate_zeros()
        features.sort_indices()

        label_array = None
        if label_path is not None:
            label_array = np.full(n, -1, dtype=np.int64)
            for node, label in labels.items():
                label_array[node] = label

        graph = AttributedGraph(
            adjacency=adjacency_from_edges(edges, n),
            features=features,
            labels=label_array,
        )
        logger.info(
            f"Loaded graph with n={graph.n}, m={graph.m}, "
            f"{graph.num_edges} edges, {graph.features.nnz} feature entries"
        )
        return graph

    def _parse_edges(
        self, path: Path
    ) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
        """Parse the edge file and its optional ``#n=<n> m=<m>`` header."""
        pairs: List[Tuple[int, int]] = []
        header_sizes: Optional[Tuple[int, int]] = None
        for line_number, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                header = HEADER_PATTERN.match(stripped)
                if line_number == 1 and header:
                    header_sizes = int(header.group(1)), int(header.group(2))
                    continue
                raise GraphParseError(path, line_number, f"unexpected line '{stripped}'")

            src, dst = self._parse_ints(path, line_number, stripped, 2)
            if src == dst:
                raise GraphParseError(path, line_number, f"self-loop on node {src}")
            pairs.append((min(src, dst), max(src, dst)))

        if not pairs:
            return np.zeros((0, 2), dtype=np.int64), header_sizes
        # Symmetrize and dedupe on the canonical pair
        return np.unique(np.array(pairs, dtype=np.int64), axis=0), header_sizes

    def _parse_features(
        self, path: Path
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Optional[Tuple[int, int]]]:
        """Parse sparse triples or a dense CSV, chosen by the header line."""
        lines = path.read_text().splitlines()
        if not lines:
            raise GraphParseError(path, 1, "missing 'sparse' or 'dense' header")
        mode = lines[0].strip().lower()

        rows: List[int] = []
        cols: List[int] = []
        values: List[float] = []

        if mode == "sparse":
            seen: Dict[Tuple[int, int], int] = {}
            for line_number, line in enumerate(lines[1:], start=2):
                stripped = line.strip()
                if not stripped:
                    continue
                parts = stripped.split()
                if len(parts) != 3:
                    raise GraphParseError(
                        path, line_number, "expected 'node<TAB>attr<TAB>value'"
                    )
                node, attr = self._parse_ints(path, line_number, "\t".join(parts[:2]), 2)
                value = self._parse_float(path, line_number, parts[2])
                if (node, attr) in seen:
                    raise GraphParseError(
                        path,
                        line_number,
                        f"duplicate entry ({node}, {attr}), first on line {seen[(node, attr)]}",
                    )
                seen[(node, attr)] = line_number
                rows.append(node)
                cols.append(attr)
                values.append(value)
            shape = None

        elif mode == "dense":
            width: Optional[int] = None
            row_index = 0
            for line_number, line in enumerate(lines[1:], start=2):
                stripped = line.strip()
                if not stripped:
                    continue
                cells = [self._parse_float(path, line_number, c) for c in stripped.split(",")]
                if width is None:
                    width = len(cells)
                elif len(cells) != width:
                    raise GraphParseError(
                        path, line_number, f"expected {width} columns, got {len(cells)}"
                    )
                for col, value in enumerate(cells):
                    if value != 0.0:
                        rows.append(row_index)
                        cols.append(col)
                        values.append(value)
                row_index += 1
            shape = (row_index, width or 0)

        else:
            raise GraphParseError(path, 1, f"unknown feature format '{lines[0].strip()}'")

        return (
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(values, dtype=np.float64),
            shape,
        )

    def _parse_labels(self, path: Path) -> Dict[int, int]:
        """Parse ``node<TAB>label`` lines; one label per node."""
        labels: Dict[int, int] = {}
        for line_number, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            node, label = self._parse_ints(path, line_number, stripped, 2)
            if label < 0:
                raise GraphParseError(path, line_number, "labels must be non-negative")
            if node in labels:
                raise GraphParseError(path, line_number, f"node {node} labeled twice")
            labels[node] = label
        return labels

    @staticmethod
    def _parse_ints(path: Path, line_number: int, text: str, count: int) -> List[int]:
        parts = text.split()
        if len(parts) != count:
            raise GraphParseError(
                path, line_number, f"expected {count} whitespace-separated integers"
            )
        try:
            values = [int(p) for p in parts]
        except ValueError:
            raise GraphParseError(path, line_number, f"not an integer in '{text}'")
        if any(v < 0 for v in values):
            raise BoundsError(f"{path}:{line_number}: negative index in '{text}'")
        return values

    @staticmethod
    def _parse_float(path: Path, line_number: int, text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise GraphParseError(path, line_number, f"not a number: '{text}'")
        if not np.isfinite(value):
            raise GraphParseError(path, line_number, f"non-finite value '{text}'")
        return value

    @staticmethod
    def _check_bounds(
        indices: np.ndarray, limit: int, kind: str, path: PathLike
    ) -> None:
        if indices.size and int(indices.max()) >= limit:
            raise BoundsError(
                f"{path}: {kind} index {int(indices.max())} out of range (< {limit})"
            )


def load_graph(
    edge_path: PathLike,
    feature_path: PathLike,
    label_path: Optional[PathLike] = None,
    n: Optional[int] = None,
    m: Optional[int] = None,
) -> AttributedGraph:
    """Convenience function to load an attributed graph.

    Args:
        edge_path: Edge file path
        feature_path: Feature file path
        label_path: Optional label file path
        n: Optional declared node count
        m: Optional declared attribute-category count

    Returns:
        Validated AttributedGraph
    """
    return GraphLoader(n=n, m=m).load(edge_path, feature_path, label_path)


def degree(graph: AttributedGraph, v: int) -> int:
    """Number of neighbors of node ``v``."""
    if not 0 <= v < graph.n:
        raise BoundsError(f"node {v} out of range for n={graph.n}")
    indptr = graph.adjacency.indptr
    return int(indptr[v + 1] - indptr[v])


def split_edges(
    graph: AttributedGraph,
    train_frac: float = 0.85,
    test_frac: float = 0.10,
    val_frac: float = 0.05,
    seed: int = 0,
) -> EdgeSplit:
    """Randomly partition undirected edges into train/test/validation sets.

    Held-out counts are ``round(frac * E)``; training keeps the rest. Each
    held-out positive set gets an equally sized set of sampled non-edges.

    Args:
        graph: Graph to split
        train_frac: Share of training edges
        test_frac: Share of test edges
        val_frac: Share of validation edges
        seed: Root seed

    Returns:
        EdgeSplit: Deterministic split for the given seed

    Raises:
        ConfigurationError: If fractions do not sum to 1 or edges are too few
    """
    if abs(train_frac + test_frac + val_frac - 1.0) > 1e-9:
        raise ConfigurationError("split fractions must sum to 1")
    edges = graph.edge_list()
    num_edges = edges.shape[0]
    if num_edges < MIN_SPLIT_EDGES:
        raise ConfigurationError(
            f"need at least {MIN_SPLIT_EDGES} edges to split, graph has {num_edges}"
        )

    num_test = int(round(test_frac * num_edges))
    num_val = int(round(val_frac * num_edges))
    num_train = num_edges - num_test - num_val
    if (test_frac > 0 and num_test == 0) or (val_frac > 0 and num_val == 0):
        raise ConfigurationError(f"{num_edges} edges leave an empty held-out set")
    if num_train <= 0:
        raise ConfigurationError("split leaves no training edges")

    rng = derive_rng(seed, "split")
    order = rng.permutation(num_edges)
    test_pos = edges[np.sort(order[:num_test])]
    val_pos = edges[np.sort(order[num_test : num_test + num_val])]
    train_pos = edges[np.sort(order[num_test + num_val :])]

    negatives = sample_non_edges(graph, num_test + num_val, rng)
    split = EdgeSplit(
        train_graph=graph.with_edges(train_pos),
        val_pos=val_pos,
        val_neg=negatives[num_test:],
        test_pos=test_pos,
        test_neg=negatives[:num_test],
    )
    logger.info(
        f"Split {num_edges} edges into {num_train} train / {num_test} test / {num_val} val"
    )
    return split


def sample_non_edges(
    graph: AttributedGraph, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` distinct canonical non-edges uniformly by rejection."""
    n = graph.n
    available = n * (n - 1) // 2 - graph.num_edges
    if count > available:
        raise ConfigurationError(
            f"requested {count} negative pairs but only {available} non-edges exist"
        )

    adj = graph.adjacency
    chosen: List[Tuple[int, int]] = []
    seen = set()
    while len(chosen) < count:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v:
            continue
        pair = (min(u, v), max(u, v))
        if pair in seen or adj[pair[0], pair[1]] != 0:
            continue
        seen.add(pair)
        chosen.append(pair)
    return np.asarray(chosen, dtype=np.int64).reshape(-1, 2)


def perturb_edges(graph: AttributedGraph, ratio: float, seed: int) -> AttributedGraph:
    """Remove ``floor(ratio * E)`` undirected edges uniformly at random.

    Args:
        graph: Graph to perturb
        ratio: Masking ratio in [0, 1)
        seed: Root seed

    Returns:
        Graph with the same nodes, features and labels and fewer edges
    """
    if not 0.0 <= ratio < 1.0:
        raise ConfigurationError(f"perturbation ratio must be in [0, 1), got {ratio}")
    edges = graph.edge_list()
    num_removed = int(np.floor(ratio * edges.shape[0]))
    if num_removed == 0:
        return graph

    rng = derive_rng(seed, "perturb")
    keep = np.sort(rng.permutation(edges.shape[0])[num_removed:])
    logger.info(f"Masked {num_removed} of {edges.shape[0]} edges (ratio {ratio})")
    return graph.with_edges(edges[keep])
