"""Report, metric-stream and run-manifest models."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

MetricName = Literal["auc", "ap", "f1_micro", "f1_macro"]


class MetricReport(BaseModel):
    """One measured metric of one run."""

    task: str = Field(description="Task label, e.g. 'lp', 'nc', 'ablate:gcn'")
    metric: MetricName = Field(description="Metric name")
    value: float = Field(ge=0.0, le=1.0, description="Metric value in [0, 1]")
    config: Dict[str, Any] = Field(
        default_factory=dict, description="Echo of the resolved run configuration"
    )
    seed: int = Field(description="Root seed of the run")
    setting: Optional[float] = Field(
        None, description="Swept value (ratio, N, alpha, ...) for sweep rows"
    )


class EpochMetrics(BaseModel):
    """Per-epoch record of the training metrics stream."""

    epoch: int
    loss: float
    val_auc: float
    val_ap: float
    seconds: float = Field(0.0, description="Wall-clock time of the epoch")

    def log_record(self) -> Dict[str, Any]:
        """Deterministic subset written to ``metrics.jsonl``."""
        return self.model_dump(exclude={"seconds"})


class RunManifest(BaseModel):
    """Everything needed to reproduce and locate the output of one command."""

    command: str
    config: Dict[str, Any] = Field(description="Resolved merged configuration")
    seed: int
    input_digests: Dict[str, str] = Field(
        default_factory=dict, description="SHA-256 of every input file"
    )
    artifacts: Dict[str, str] = Field(
        default_factory=dict, description="Artifact name to path"
    )
    timings: Dict[str, float] = Field(
        default_factory=dict, description="Wall-clock seconds per phase"
    )
    epoch_seconds: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _artifacts_exist(self) -> "RunManifest":
        missing = [p for p in self.artifacts.values() if not Path(p).exists()]
        if missing:
            raise ValueError(f"manifest lists missing artifacts: {missing}")
        return self
