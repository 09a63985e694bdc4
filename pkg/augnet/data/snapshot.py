"""On-disk parameter snapshots and embedding export."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError

from augnet.engine.optim import Adam
from augnet.engine.scorer import PARAM_NAMES, ScorerParams
from augnet.engine.training import TrainResult, TrainState
from augnet.errors import CompatibilityError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class SnapshotMeta(BaseModel):
    """Sidecar JSON describing the arrays in a snapshot."""

    format_version: int = FORMAT_VERSION
    n: int = Field(ge=0)
    m: int = Field(ge=0)
    k: int = Field(ge=0)
    dim: int = Field(ge=1)
    alpha: float = Field(ge=0.0, le=1.0, description="Alpha used in the operator")
    variant: str
    heads: List[str] = Field(default_factory=list, description="Stored scorer heads")
    best_epoch: int = 0
    config: Dict[str, Any] = Field(default_factory=dict)


class SnapshotStore:
    """Reads and writes versioned snapshots under one directory."""

    def __init__(self, directory: Union[str, Path]):
        """Initialize the store.

        Args:
            directory: Output directory, created if missing
        """
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, result: TrainResult, name: str = "snapshot") -> Path:
        """Write ``<name>.npz`` plus its ``<name>.json`` metadata.

        The inner variant has no scorer heads, so no MLP arrays are stored.

        Returns:
            Path of the array file
        """
        state = result.state
        arrays = {"base": state.base}
        for head_name, head in state.heads.items():
            for param, array in head.arrays().items():
                arrays[f"{head_name}.{param}"] = array

        array_path = self.directory / f"{name}.npz"
        np.savez(array_path, **arrays)

        meta = SnapshotMeta(
            n=result.operator.n,
            m=result.operator.m,
            k=result.config.k,
            dim=result.config.dim,
            alpha=result.operator.alpha,
            variant=result.config.variant.value,
            heads=sorted(state.heads),
            best_epoch=state.best_epoch,
            config=result.config.model_dump(mode="json"),
        )
        self._meta_path(array_path).write_text(meta.model_dump_json(indent=2))
        logger.info(f"Saved snapshot of {len(arrays)} arrays to {array_path}")
        return array_path

    def load(self, path: Union[str, Path]) -> Tuple[TrainState, SnapshotMeta]:
        """Read a snapshot back into a TrainState with fresh optimizer moments.

        Raises:
            FileNotFoundError: If the array or metadata file is missing
            CompatibilityError: On an unknown format or inconsistent arrays
        """
        array_path = Path(path)
        if not array_path.is_absolute() and not array_path.exists():
            array_path = self.directory / array_path
        meta_path = self._meta_path(array_path)
        for required in (array_path, meta_path):
            if not required.exists():
                raise FileNotFoundError(f"snapshot file not found: {required}")

        try:
            meta = SnapshotMeta.model_validate(json.loads(meta_path.read_text()))
        except (json.JSONDecodeError, ValidationError) as e:
            raise CompatibilityError(f"unreadable snapshot metadata {meta_path}: {e}") from e
        if meta.format_version != FORMAT_VERSION:
            raise CompatibilityError(
                f"snapshot format {meta.format_version} is not supported "
                f"(expected {FORMAT_VERSION})"
            )

        with np.load(array_path) as data:
            arrays = {key: data[key] for key in data.files}
        base = arrays.get("base")
        if base is None or base.shape != (meta.n + meta.m, meta.dim):
            raise CompatibilityError(f"snapshot {array_path} has no matching base array")

        heads: Dict[str, ScorerParams] = {}
        for head_name in meta.heads:
            try:
                heads[head_name] = ScorerParams(
                    **{p: arrays[f"{head_name}.{p}"] for p in PARAM_NAMES}
                )
            except KeyError as e:
                raise CompatibilityError(f"snapshot is missing array {e}") from e

        lr = float(meta.config.get("lr", 0.01))
        state = TrainState(base=base, heads=heads, optimizer=Adam(lr), best_epoch=meta.best_epoch)
        return state, meta

    @staticmethod
    def _meta_path(array_path: Path) -> Path:
        return array_path.with_suffix(".json")


def check_compatible(
    meta: SnapshotMeta,
    k: Optional[int] = None,
    dim: Optional[int] = None,
    alpha: Optional[float] = None,
) -> None:
    """Reject explicitly requested settings that disagree with a snapshot."""
    mismatches = []
    if k is not None and k != meta.k:
        mismatches.append(f"K={k} (snapshot {meta.k})")
    if dim is not None and dim != meta.dim:
        mismatches.append(f"d={dim} (snapshot {meta.dim})")
    if alpha is not None and not np.isclose(alpha, meta.alpha):
        mismatches.append(f"alpha={alpha} (snapshot {meta.alpha})")
    if mismatches:
        raise CompatibilityError("snapshot mismatch: " + ", ".join(mismatches))


def write_embeddings_csv(embeddings: np.ndarray, path: Union[str, Path]) -> Path:
    """Write ``node,dim0,dim1,...`` rows, one per node."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        embeddings, columns=[f"dim{i}" for i in range(embeddings.shape[1])]
    )
    frame.insert(0, "node", np.arange(embeddings.shape[0]))
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Wrote {embeddings.shape[0]} embeddings to {path}")
    return path
