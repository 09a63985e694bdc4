"""Tests for snapshot persistence and embedding export."""

import json

import numpy as np
import pandas as pd
import pytest

from augnet.data.snapshot import SnapshotStore, check_compatible, write_embeddings_csv
from augnet.engine.training import train
from augnet.errors import CompatibilityError
from augnet.models.config import TrainConfig, Variant


@pytest.fixture
def trained(block_graph):
    return train(block_graph, TrainConfig(dim=4, k=1, topn=None, epochs=2, batch_size=128))


class TestSnapshotStore:
    """Tests for saving and loading parameter snapshots."""

    def test_round_trip(self, tmp_path, trained):
        """Test every array and the metadata survive a save/load cycle."""
        store = SnapshotStore(tmp_path / "snap")
        path = store.save(trained)
        state, meta = store.load(path)

        assert np.array_equal(state.base, trained.state.base)
        for name, array in trained.state.parameters().items():
            assert np.array_equal(state.parameters()[name], array), name
        assert meta.n == trained.operator.n
        assert meta.m == trained.operator.m
        assert meta.heads == ["shared"]
        assert meta.best_epoch == trained.best_epoch
        assert state.step == 0

    def test_relative_name_resolves_in_directory(self, tmp_path, trained):
        """Test loading by bare file name."""
        store = SnapshotStore(tmp_path)
        store.save(trained, name="run")
        state, _ = store.load("run.npz")
        assert state.base.shape == trained.state.base.shape

    def test_inner_stores_no_mlp(self, tmp_path, block_graph):
        """Test the dot-product variant writes only the base embeddings."""
        result = train(
            block_graph,
            TrainConfig(dim=4, k=1, topn=None, epochs=1, variant=Variant.INNER),
        )
        path = SnapshotStore(tmp_path).save(result)
        with np.load(path) as data:
            assert data.files == ["base"]
        state, meta = SnapshotStore(tmp_path).load(path)
        assert state.heads == {}
        assert meta.variant == "inner"

    def test_gcn_records_operator_alpha(self, tmp_path, block_graph):
        """Test the stored alpha is the one the operator was built with."""
        result = train(
            block_graph,
            TrainConfig(dim=4, k=1, alpha=0.3, topn=None, epochs=1, variant=Variant.GCN),
        )
        _, meta = SnapshotStore(tmp_path).load(SnapshotStore(tmp_path).save(result))
        assert meta.alpha == 1.0

    def test_missing_file(self, tmp_path):
        """Test a missing snapshot raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            SnapshotStore(tmp_path).load(tmp_path / "absent.npz")

    def test_unknown_format_version(self, tmp_path, trained):
        """Test a future format is rejected."""
        store = SnapshotStore(tmp_path)
        path = store.save(trained)
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text())
        meta["format_version"] = 99
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(CompatibilityError, match="format 99"):
            store.load(path)

    def test_missing_head_array(self, tmp_path, trained):
        """Test a listed head without its arrays is rejected."""
        store = SnapshotStore(tmp_path)
        path = store.save(trained)
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text())
        meta["heads"] = ["shared", "attr"]
        meta_path.write_text(json.dumps(meta))
        with pytest.raises(CompatibilityError, match="missing array"):
            store.load(path)


class TestCheckCompatible:
    """Tests for snapshot/flag agreement."""

    def test_matching_and_unset(self, tmp_path, trained):
        """Test matching or omitted settings pass."""
        _, meta = SnapshotStore(tmp_path).load(SnapshotStore(tmp_path).save(trained))
        check_compatible(meta)
        check_compatible(meta, k=1, dim=4, alpha=meta.alpha)

    def test_mismatch_lists_every_field(self, tmp_path, trained):
        """Test each disagreeing setting is named."""
        _, meta = SnapshotStore(tmp_path).load(SnapshotStore(tmp_path).save(trained))
        with pytest.raises(CompatibilityError) as excinfo:
            check_compatible(meta, k=3, dim=8)
        assert "K=3" in str(excinfo.value)
        assert "d=8" in str(excinfo.value)


class TestEmbeddingsCsv:
    """Tests for the embedding export."""

    def test_header_and_values(self, tmp_path):
        """Test the node column and one column per dimension."""
        embeddings = np.array([[0.5, -1.25], [1e-3, 2.0], [0.0, 3.5]])
        path = write_embeddings_csv(embeddings, tmp_path / "emb.csv")
        assert path.read_text().splitlines()[0] == "node,dim0,dim1"
        frame = pd.read_csv(path)
        assert frame["node"].tolist() == [0, 1, 2]
        assert np.allclose(frame[["dim0", "dim1"]].to_numpy(), embeddings)
