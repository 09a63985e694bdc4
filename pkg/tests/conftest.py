"""Shared fixtures for the augnet test suite."""

from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pytest

from augnet.models.graph import AttributedGraph
from augnet.utils.synthetic import two_block_graph


def write_graph(graph: AttributedGraph, directory: Path) -> dict:
    """Write a graph in the text input formats and return the paths."""
    edges = directory / "edges.txt"
    edges.write_text(
        f"#n={graph.n} m={graph.m}\n"
        + "".join(f"{u}\t{v}\n" for u, v in graph.edge_list())
    )
    coo = graph.features.tocoo()
    features = directory / "features.txt"
    features.write_text(
        "sparse\n"
        + "".join(f"{r}\t{c}\t{v!r}\n" for r, c, v in zip(coo.row, coo.col, coo.data))
    )
    paths = {"edges": edges, "features": features}
    if graph.labels is not None:
        labels = directory / "labels.txt"
        labels.write_text(
            "".join(f"{v}\t{lab}\n" for v, lab in enumerate(graph.labels) if lab >= 0)
        )
        paths["labels"] = labels
    return paths


@pytest.fixture
def write_text(tmp_path: Path) -> Callable[[str, str], Path]:
    """Write ``content`` to ``tmp_path/name``."""

    def _write(name: str, content: str) -> Path:
        path = tmp_path / name
        path.write_text(content)
        return path

    return _write


@pytest.fixture
def block_graph() -> AttributedGraph:
    return two_block_graph(seed=0)


@pytest.fixture
def block_graph_files(tmp_path: Path, block_graph: AttributedGraph) -> dict:
    return write_graph(block_graph, tmp_path)


def edge_set(edges: Optional[np.ndarray]) -> set:
    return {(int(u), int(v)) for u, v in np.asarray(edges).reshape(-1, 2)}
