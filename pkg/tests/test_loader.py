"""Tests for graph loading, splitting and edge perturbation."""

import numpy as np
import pytest
import scipy.sparse as sp

from augnet.data.loader import GraphLoader, degree, load_graph, perturb_edges, split_edges
from augnet.errors import BoundsError, ConfigurationError, GraphParseError
from augnet.models.graph import AttributedGraph, adjacency_from_edges
from augnet.utils.synthetic import toy_graph

from tests.conftest import edge_set


def ring_graph(n: int = 100) -> AttributedGraph:
    edges = np.array([(i, (i + 1) % n) for i in range(n)])
    return AttributedGraph(
        adjacency=adjacency_from_edges(edges, n), features=sp.csr_matrix((n, 1))
    )


class TestGraphLoader:
    """Tests for the text input formats."""

    def test_load_sparse_graph(self, write_text):
        """Test a plain edge list with sparse features."""
        edges = write_text("edges.txt", "0\t1\n1\t2\n")
        features = write_text("features.txt", "sparse\n0\t0\t1.0\n2\t1\t-0.5\n")

        graph = load_graph(edges, features)

        assert graph.n == 3
        assert graph.m == 2
        assert graph.num_edges == 2
        assert graph.adjacency[0, 1] == graph.adjacency[1, 0] == 1
        assert graph.features[2, 1] == -0.5
        assert graph.labels is None

    def test_header_declares_sizes(self, write_text):
        """Test that a '#n= m=' header fixes n and m beyond the data."""
        edges = write_text("edges.txt", "#n=5 m=3\n0 1\n")
        features = write_text("features.txt", "sparse\n0 0 1\n")

        graph = load_graph(edges, features)

        assert (graph.n, graph.m) == (5, 3)
        assert degree(graph, 4) == 0

    def test_header_applies_to_one_file_only(self, write_text):
        """Test a reused loader does not carry a header into the next load."""
        with_header = write_text("a.txt", "#n=9 m=4\n0 1\n")
        without_header = write_text("b.txt", "0 1\n1 2\n")
        features = write_text("features.txt", "sparse\n0 0 1\n")
        loader = GraphLoader()

        first = loader.load(with_header, features)
        second = loader.load(without_header, features)

        assert (first.n, first.m) == (9, 4)
        assert (second.n, second.m) == (3, 1)
        assert loader.n is None and loader.m is None

    def test_duplicate_and_reversed_edges_collapse(self, write_text):
        """Test that 'u v' and 'v u' describe one undirected edge."""
        edges = write_text("edges.txt", "0 1\n1 0\n0 1\n")
        features = write_text("features.txt", "sparse\n")

        graph = load_graph(edges, features)

        assert graph.num_edges == 1
        assert np.all(graph.adjacency.data == 1)

    def test_self_loop_is_rejected_with_line_number(self, write_text):
        """Test that a self-loop is reported with its line."""
        edges = write_text("edges.txt", "0 1\n5 5\n")
        features = write_text("features.txt", "sparse\n")

        with pytest.raises(GraphParseError) as excinfo:
            load_graph(edges, features)

        assert excinfo.value.line_number == 2
        assert "self-loop" in str(excinfo.value)
        assert f"{edges}:2:" in str(excinfo.value)

    def test_index_beyond_header_is_bounds_error(self, write_text):
        """Test that indices outside the declared n raise BoundsError."""
        edges = write_text("edges.txt", "#n=3 m=1\n0 7\n")
        features = write_text("features.txt", "sparse\n")

        with pytest.raises(BoundsError):
            load_graph(edges, features)

    def test_negative_index_is_bounds_error(self, write_text):
        """Test that negative node ids are out of range."""
        edges = write_text("edges.txt", "-1 2\n")
        features = write_text("features.txt", "sparse\n")

        with pytest.raises(BoundsError):
            load_graph(edges, features)

    def test_attribute_out_of_range(self, write_text):
        """Test that a feature column beyond the header m is rejected."""
        edges = write_text("edges.txt", "#n=2 m=1\n0 1\n")
        features = write_text("features.txt", "sparse\n0\t3\t1.0\n")

        with pytest.raises(BoundsError):
            load_graph(edges, features)

    def test_missing_file_names_path(self, tmp_path, write_text):
        """Test that a missing input file raises FileNotFoundError with its path."""
        features = write_text("features.txt", "sparse\n")
        missing = tmp_path / "nope.txt"

        with pytest.raises(FileNotFoundError, match="nope.txt"):
            load_graph(missing, features)

    def test_malformed_edge_line(self, write_text):
        """Test that non-integer fields are parse errors."""
        edges = write_text("edges.txt", "0 a\n")
        features = write_text("features.txt", "sparse\n")

        with pytest.raises(GraphParseError):
            load_graph(edges, features)

    def test_comment_after_first_line_is_rejected(self, write_text):
        """Test that only the first line may be a header."""
        edges = write_text("edges.txt", "0 1\n#n=4 m=1\n")
        features = write_text("features.txt", "sparse\n")

        with pytest.raises(GraphParseError):
            load_graph(edges, features)

    def test_dense_features(self, write_text):
        """Test the dense CSV feature format."""
        edges = write_text("edges.txt", "0 1\n")
        features = write_text("features.txt", "dense\n1,0,0\n0,2.5,0\n")

        graph = load_graph(edges, features)

        assert graph.m == 3
        assert graph.features[1, 1] == 2.5
        assert graph.features.nnz == 2

    def test_dense_ragged_rows(self, write_text):
        """Test that dense rows must have equal widths."""
        edges = write_text("edges.txt", "0 1\n")
        features = write_text("features.txt", "dense\n1,0\n0,2,3\n")

        with pytest.raises(GraphParseError):
            load_graph(edges, features)

    def test_duplicate_sparse_entry(self, write_text):
        """Test that a repeated (node, attr) pair is a parse error."""
        edges = write_text("edges.txt", "0 1\n")
        features = write_text("features.txt", "sparse\n0 0 1\n0 0 2\n")

        with pytest.raises(GraphParseError, match="duplicate"):
            load_graph(edges, features)

    def test_unknown_feature_format(self, write_text):
        """Test that the feature header must name a known format."""
        edges = write_text("edges.txt", "0 1\n")
        features = write_text("features.txt", "csv\n1,2\n")

        with pytest.raises(GraphParseError, match="unknown feature format"):
            load_graph(edges, features)

    def test_labels(self, write_text):
        """Test that unlabeled nodes get -1."""
        edges = write_text("edges.txt", "0 1\n1 2\n")
        features = write_text("features.txt", "sparse\n")
        labels = write_text("labels.txt", "0 1\n2 0\n")

        graph = GraphLoader().load(edges, features, labels)

        assert graph.labels.tolist() == [1, -1, 0]

    def test_node_labeled_twice(self, write_text):
        """Test that duplicate labels are rejected."""
        edges = write_text("edges.txt", "0 1\n")
        features = write_text("features.txt", "sparse\n")
        labels = write_text("labels.txt", "0 1\n0 0\n")

        with pytest.raises(GraphParseError):
            load_graph(edges, features, labels)


class TestDegree:
    """Tests for node degree lookup."""

    def test_toy_degrees(self):
        """Test degrees on the toy graph."""
        graph = toy_graph()
        assert [degree(graph, v) for v in range(graph.n)] == [3, 2, 1, 2, 1, 1]

    def test_out_of_range(self):
        """Test that degree rejects invalid nodes."""
        with pytest.raises(BoundsError):
            degree(toy_graph(), 6)


class TestSplitEdges:
    """Tests for train/validation/test edge splitting."""

    def test_partition(self, block_graph):
        """Test that positives partition the edge set and negatives are non-edges."""
        split = split_edges(block_graph, 0.85, 0.10, 0.05, seed=3)
        num_edges = block_graph.num_edges

        train = edge_set(split.train_graph.edge_list())
        test = edge_set(split.test_pos)
        val = edge_set(split.val_pos)

        assert len(test) == int(round(0.10 * num_edges))
        assert len(val) == int(round(0.05 * num_edges))
        assert train | test | val == edge_set(block_graph.edge_list())
        assert not (train & test) and not (train & val) and not (test & val)

        negatives = edge_set(split.test_neg) | edge_set(split.val_neg)
        assert len(negatives) == len(test) + len(val)
        assert not negatives & edge_set(block_graph.edge_list())
        assert all(u < v for u, v in negatives)

    def test_features_untouched(self, block_graph):
        """Test that splitting keeps features and labels."""
        split = split_edges(block_graph, seed=0)
        assert (split.train_graph.features != block_graph.features).nnz == 0
        assert np.array_equal(split.train_graph.labels, block_graph.labels)

    def test_deterministic(self, block_graph):
        """Test that the same seed gives the same split."""
        first = split_edges(block_graph, seed=7)
        second = split_edges(block_graph, seed=7)
        assert np.array_equal(first.test_pos, second.test_pos)
        assert np.array_equal(first.val_neg, second.val_neg)

    def test_too_few_edges(self):
        """Test that tiny graphs cannot be split."""
        with pytest.raises(ConfigurationError):
            split_edges(toy_graph())

    def test_fractions_must_sum_to_one(self, block_graph):
        """Test fraction validation."""
        with pytest.raises(ConfigurationError):
            split_edges(block_graph, 0.8, 0.1, 0.2)

    def test_classification_split_has_no_test_edges(self, block_graph):
        """Test the degenerate 95/5 split."""
        split = split_edges(block_graph, 0.95, 0.0, 0.05, seed=0)
        assert split.test_pos.shape == (0, 2)
        assert split.val_pos.shape[0] == int(round(0.05 * block_graph.num_edges))


class TestPerturbEdges:
    """Tests for random edge masking."""

    def test_ratio_zero_is_identity(self):
        """Test that ratio 0 keeps every edge."""
        graph = ring_graph()
        assert edge_set(perturb_edges(graph, 0.0, seed=1).edge_list()) == edge_set(
            graph.edge_list()
        )

    def test_half_of_hundred_edges(self):
        """Test that ratio 0.5 on 100 edges leaves exactly 50."""
        assert perturb_edges(ring_graph(), 0.5, seed=1).num_edges == 50

    def test_remaining_edges_are_a_subset(self):
        """Test that removed and remaining edges partition the original."""
        graph = ring_graph()
        remaining = edge_set(perturb_edges(graph, 0.3, seed=4).edge_list())
        original = edge_set(graph.edge_list())
        removed = original - remaining
        assert remaining <= original
        assert len(removed) == 30
        assert removed | remaining == original

    def test_symmetry_and_diagonal_preserved(self):
        """Test that the perturbed adjacency stays a valid simple graph."""
        perturbed = perturb_edges(ring_graph(), 0.7, seed=2)
        adj = perturbed.adjacency
        assert (adj != adj.T).nnz == 0
        assert np.all(adj.diagonal() == 0)

    def test_ratio_one_rejected(self):
        """Test that ratio must be below 1."""
        with pytest.raises(ConfigurationError):
            perturb_edges(ring_graph(), 1.0, seed=0)
