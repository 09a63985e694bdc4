"""Training configuration model and config-file loading."""

import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from augnet.errors import ConfigurationError

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = {"nc": 0.2, "lp": 0.8}


class Variant(str, Enum):
    """Model variant used for ablations."""

    FULL = "full"
    GCN = "gcn"  # structure-only propagation, node-node loss only
    INNER = "inner"  # dot product of final-layer rows instead of the MLP scorer
    NCOLL = "ncoll"  # node-node loss only


class Task(str, Enum):
    """Downstream task the run is tuned for."""

    LINK_PREDICTION = "lp"
    NODE_CLASSIFICATION = "nc"


class TrainConfig(BaseModel):
    """Every knob of a training run."""

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    dim: int = Field(128, ge=1, description="Embedding dimension d")
    k: int = Field(2, ge=1, description="Number of propagation layers K")
    alpha: Optional[float] = Field(
        None,
        ge=0.0,
        le=1.0,
        description="Structure/attribute trade-off; None picks the task default",
    )
    topn: Optional[int] = Field(
        50, ge=1, description="Keep the N largest feature values per row; None disables"
    )
    lr: float = Field(0.01, gt=0.0, description="Adam learning rate")
    epochs: int = Field(100, ge=1, description="Maximum number of epochs")
    patience: int = Field(20, ge=1, description="Epochs without val-AP gain")
    negatives_per_positive: int = Field(5, ge=1, description="Negatives Q per positive")
    batch_size: int = Field(1024, ge=1, description="Positive pairs per Adam step")
    seed: int = Field(0, ge=0, description="Root seed for every random stream")
    variant: Variant = Field(Variant.FULL, description="Ablation variant")
    task: Task = Field(Task.LINK_PREDICTION, description="Downstream task")
    same_type_negatives: bool = Field(
        False, description="Draw negatives only from the positive's entity type"
    )
    separate_heads: bool = Field(
        False, description="Separate MLPs for node-node and node-attribute pairs"
    )
    train_frac: float = Field(0.85, ge=0.0, le=1.0, description="Training edge share")
    test_frac: float = Field(0.10, ge=0.0, le=1.0, description="Test edge share")
    val_frac: float = Field(0.05, ge=0.0, le=1.0, description="Validation edge share")

    @model_validator(mode="after")
    def _check_fractions(self) -> "TrainConfig":
        total = self.train_frac + self.test_frac + self.val_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        if self.val_frac <= 0.0:
            raise ValueError("val_frac must be positive for early stopping")
        return self

    @property
    def effective_alpha(self) -> float:
        """Alpha used to build the operator (gcn forces 1.0)."""
        if self.variant is Variant.GCN:
            return 1.0
        if self.alpha is None:
            return DEFAULT_ALPHA[self.task.value]
        return self.alpha

    @property
    def uses_attribute_positives(self) -> bool:
        """Whether node-attribute links enter the loss."""
        return self.variant not in (Variant.GCN, Variant.NCOLL)

    @property
    def uses_mlp(self) -> bool:
        """Whether the cross-correlation MLP scorer is allocated."""
        return self.variant is not Variant.INNER

    def split_fractions(self) -> tuple[float, float, float]:
        """Train/test/val fractions; node classification holds out no test edges."""
        if self.task is Task.NODE_CLASSIFICATION:
            return 1.0 - self.val_frac, 0.0, self.val_frac
        return self.train_frac, self.test_frac, self.val_frac


def parse_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read a flat ``key=value`` file.

    Args:
        path: Config file path

    Returns:
        Mapping of raw string values keyed by field name

    Raises:
        ConfigurationError: On malformed lines, duplicates or unknown keys
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")

    known = set(TrainConfig.model_fields)
    values: Dict[str, str] = {}
    for line_number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{line_number}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"{path}:{line_number}: unknown key '{key}'")
        if key in values:
            raise ConfigurationError(f"{path}:{line_number}: duplicate key '{key}'")
        values[key] = value
    return values


def build_config(
    file_values: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> TrainConfig:
    """Merge defaults, config-file values and flag overrides into a TrainConfig.

    ``None`` overrides are ignored so unset flags never mask file values.
    The literal string ``none`` clears optional fields (``alpha``, ``topn``).
    """
    merged: Dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if isinstance(value, str) and value.lower() == "none":
                value = None
            merged[key] = value

    try:
        return TrainConfig(**merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> TrainConfig:
    """Load a config file (optional) and apply overrides."""
    file_values = parse_config_file(path) if path is not None else {}
    config = build_config(file_values, overrides)
    logger.debug(f"Resolved config: {config.model_dump(mode='json')}")
    return config


def default_out_dir() -> Path:
    """Output directory from ``AUGNET_OUT_DIR`` (default ``./runs``)."""
    return Path(os.getenv("AUGNET_OUT_DIR", "runs"))


def default_log_level() -> str:
    """Log level from ``AUGNET_LOG_LEVEL`` (default ``INFO``)."""
    return os.getenv("AUGNET_LOG_LEVEL", "INFO").upper()
