"""Link-prediction evaluation, ablation and parameter sweeps with their report writers."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import pandas as pd
from pydantic import ValidationError

from augnet.data.loader import perturb_edges, split_edges
from augnet.engine.augment import AugmentedOperator
from augnet.engine.training import TrainResult, TrainState, score_pairs, train
from augnet.errors import ConfigurationError
from augnet.eval.metrics import auc, average_precision
from augnet.models.config import TrainConfig, Variant
from augnet.models.graph import AttributedGraph, EdgeSplit
from augnet.models.report import MetricReport
from augnet.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

SweepParam = Literal["alpha", "k", "dim"]
SWEEP_PARAMS = ("alpha", "k", "dim")


def evaluate_link_prediction(
    state: TrainState, op: AugmentedOperator, split: EdgeSplit, config: TrainConfig
) -> Dict[str, float]:
    """Test AUC and AP of a trained state on the split's held-out edges."""
    pos = score_pairs(state, op, split.test_pos, config)
    neg = score_pairs(state, op, split.test_neg, config)
    return {
        "auc": auc(pos, neg),
        "ap": average_precision(pos, neg, seed=derive_seed(config.seed, "eval")),
    }


def link_prediction_reports(
    result: TrainResult, task: str = "lp", setting: Optional[float] = None
) -> List[MetricReport]:
    """AUC and AP reports for a finished run."""
    scores = evaluate_link_prediction(result.state, result.operator, result.split, result.config)
    echo = result.config.model_dump(mode="json")
    return [
        MetricReport(
            task=task,
            metric=metric,
            value=value,
            config=echo,
            seed=result.config.seed,
            setting=setting,
        )
        for metric, value in scores.items()
    ]


def _shared_split(graph: AttributedGraph, config: TrainConfig) -> EdgeSplit:
    train_frac, test_frac, val_frac = config.split_fractions()
    return split_edges(graph, train_frac, test_frac, val_frac, seed=config.seed)


def _with(config: TrainConfig, **updates: Any) -> TrainConfig:
    try:
        return TrainConfig.model_validate({**config.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigurationError(f"invalid sweep setting {updates}: {e}") from e


def robustness_sweep(
    graph: AttributedGraph,
    config: TrainConfig,
    ratios: Sequence[float],
    split: Optional[EdgeSplit] = None,
) -> List[MetricReport]:
    """Retrain with a share of training edges masked; test edges stay fixed."""
    split = split or _shared_split(graph, config)
    reports: List[MetricReport] = []
    for ratio in ratios:
        masked = split.model_copy(
            update={"train_graph": perturb_edges(split.train_graph, ratio, config.seed)}
        )
        logger.info(
            f"Robustness point ratio={ratio}: {masked.train_graph.num_edges} training edges"
        )
        result = train(graph, config, split=masked)
        reports.extend(link_prediction_reports(result, task="lp", setting=float(ratio)))
    return reports


def topn_sweep(
    graph: AttributedGraph,
    config: TrainConfig,
    n_values: Sequence[int],
    split: Optional[EdgeSplit] = None,
) -> List[MetricReport]:
    """Retrain once per top-N value on a shared split."""
    split = split or _shared_split(graph, config)
    reports: List[MetricReport] = []
    for topn in n_values:
        logger.info(f"Top-N point N={topn}")
        result = train(graph, _with(config, topn=int(topn)), split=split)
        reports.extend(link_prediction_reports(result, task="lp", setting=float(topn)))
    return reports


def sensitivity_sweep(
    graph: AttributedGraph,
    config: TrainConfig,
    param: SweepParam,
    values: Sequence[float],
    split: Optional[EdgeSplit] = None,
) -> List[MetricReport]:
    """Retrain once per value of ``alpha``, ``k`` or ``dim`` on a shared split."""
    if param not in SWEEP_PARAMS:
        raise ConfigurationError(
            f"cannot sweep '{param}', choose one of {', '.join(SWEEP_PARAMS)}"
        )
    split = split or _shared_split(graph, config)
    reports: List[MetricReport] = []
    for value in values:
        setting = float(value) if param == "alpha" else int(value)
        logger.info(f"Sensitivity point {param}={setting}")
        result = train(graph, _with(config, **{param: setting}), split=split)
        reports.extend(link_prediction_reports(result, task="lp", setting=float(setting)))
    return reports


def run_ablation(
    graph: AttributedGraph,
    config: TrainConfig,
    split: Optional[EdgeSplit] = None,
) -> List[MetricReport]:
    """Train every variant on one shared split; tasks are labelled ``ablate:<variant>``."""
    split = split or _shared_split(graph, config)
    reports: List[MetricReport] = []
    for variant in Variant:
        logger.info(f"Ablation run: {variant.value}")
        result = train(graph, _with(config, variant=variant), split=split)
        reports.extend(link_prediction_reports(result, task=f"ablate:{variant.value}"))
    return reports


def write_reports_jsonl(reports: Sequence[MetricReport], path: Union[str, Path]) -> Path:
    """One MetricReport JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for report in reports:
            handle.write(report.model_dump_json() + "\n")
    logger.info(f"Wrote {len(reports)} reports to {path}")
    return path


def reports_table(
    reports: Sequence[MetricReport], by: Literal["setting", "task"] = "setting"
) -> pd.DataFrame:
    """Wide table with one row per ``by`` value and one column per metric."""
    if not reports:
        return pd.DataFrame(columns=[by])
    frame = pd.DataFrame([r.model_dump(include={"task", "metric", "value", "setting"}) for r in reports])
    table = frame.pivot_table(index=by, columns="metric", values="value", sort=False)
    metrics = list(dict.fromkeys(frame["metric"]))
    return table[metrics].reset_index().rename_axis(columns=None)


def write_sweep_csv(
    reports: Sequence[MetricReport],
    path: Union[str, Path],
    by: Literal["setting", "task"] = "setting",
) -> Path:
    """CSV for plotting: the swept value (or task) then one column per metric."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = reports_table(reports, by)
    table.to_csv(path, index=False, float_format="%.6f")
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path

