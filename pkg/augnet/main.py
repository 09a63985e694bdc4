"""Command-line entry point for augnet."""

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from augnet import __version__
from augnet.data.loader import load_graph, split_edges
from augnet.data.snapshot import SnapshotStore, check_compatible, write_embeddings_csv
from augnet.engine import propagate
from augnet.engine.augment import build_transition, dump_operator, topn_sparsify
from augnet.engine.training import prepare_operators, train
from augnet.errors import (
    AugnetError,
    BoundsError,
    CompatibilityError,
    ConfigurationError,
    GraphParseError,
)
from augnet.eval.classify import classify
from augnet.eval.sweeps import (
    SWEEP_PARAMS,
    evaluate_link_prediction,
    link_prediction_reports,
    robustness_sweep,
    run_ablation,
    sensitivity_sweep,
    topn_sweep,
    write_reports_jsonl,
    write_sweep_csv,
)
from augnet.models.config import (
    Task,
    TrainConfig,
    Variant,
    default_log_level,
    default_out_dir,
    load_config,
)
from augnet.models.graph import AttributedGraph
from augnet.models.report import EpochMetrics, MetricReport, RunManifest
from augnet.utils.gradcheck import DEFAULT_THRESHOLD, run_gradcheck

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2

DEFAULT_RATIOS = "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    inputs = shared.add_argument_group("inputs")
    inputs.add_argument("--edges", help="Edge file (one 'src dst' pair per line)")
    inputs.add_argument("--features", help="Feature file with a sparse/dense header")
    inputs.add_argument("--labels", help="Optional node label file")
    inputs.add_argument("--config", help="key=value config file")
    inputs.add_argument("--out-dir", help="Output directory (default $AUGNET_OUT_DIR or ./runs)")
    inputs.add_argument("--log-level", help="Logging level (default $AUGNET_LOG_LEVEL or INFO)")

    model = shared.add_argument_group("model")
    model.add_argument("--seed", type=int, help="Root seed")
    model.add_argument("--alpha", type=float, help="Structure/attribute trade-off in [0, 1]")
    model.add_argument("--k", "--K", dest="k", type=int, help="Propagation steps")
    model.add_argument("--dim", "--d", dest="dim", type=int, help="Embedding dimension")
    model.add_argument("--topn", help="Keep the N largest features per row ('none' disables)")
    model.add_argument("--variant", choices=[v.value for v in Variant], help="Model variant")
    model.add_argument("--task", choices=[t.value for t in Task], help="lp or nc")

    optim = shared.add_argument_group("optimization")
    optim.add_argument("--epochs", type=int, help="Maximum epochs")
    optim.add_argument("--lr", type=float, help="Adam learning rate")
    optim.add_argument("--negatives", type=int, help="Negatives per positive pair")
    optim.add_argument("--batch-size", type=int, help="Positive pairs per minibatch")
    optim.add_argument("--patience", type=int, help="Early-stopping patience in epochs")
    return shared


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="augnet",
        description="Attributed network embedding via augmented node/attribute-category propagation",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    def add(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, parents=[shared], help=help_text, allow_abbrev=False)
        sub.set_defaults(handler=handler)
        return sub

    add("train", cmd_train, "Train and write snapshot, embeddings, metrics and manifest")

    evaluate = add("eval", cmd_eval, "Evaluate a saved snapshot")
    evaluate.add_argument("--snapshot", help="Snapshot .npz (default <out-dir>/snapshot.npz)")

    add("ablate", cmd_ablate, "Train all four variants on one shared split")

    perturb = add("perturb-sweep", cmd_perturb_sweep, "Link prediction under masked training edges")
    perturb.add_argument("--ratios", type=_float_list, default=_float_list(DEFAULT_RATIOS), help="Masking ratios")

    topn = add("topn-sweep", cmd_topn_sweep, "Link prediction for several top-N values")
    topn.add_argument("--values", type=_float_list, required=True, help="Comma-separated N values")

    sensitivity = add("sensitivity-sweep", cmd_sensitivity_sweep, "Link prediction across alpha, K or d")
    sensitivity.add_argument("--param", choices=SWEEP_PARAMS, required=True, help="Parameter to sweep")
    sensitivity.add_argument("--values", type=_float_list, required=True, help="Comma-separated values")

    gradcheck = add("gradcheck", cmd_gradcheck, "Finite-difference check of every backward pass")
    gradcheck.add_argument("--instances", type=int, default=20, help="Random instances per suite")
    gradcheck.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="Max relative error")

    dump = add("dump-operator", cmd_dump_operator, "Write the transition operator as triplets")
    dump.add_argument("--output", help="Output file (default <out-dir>/operator.tsv)")
    return parser


def configure_logging(level: Optional[str]) -> None:
    """Send log records to stderr so stdout carries only JSON."""
    logging.basicConfig(
        level=(level or default_log_level()).upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "alpha": args.alpha,
        "k": args.k,
        "dim": args.dim,
        "topn": args.topn,
        "variant": args.variant,
        "task": args.task,
        "epochs": args.epochs,
        "lr": args.lr,
        "negatives_per_positive": args.negatives,
        "batch_size": args.batch_size,
        "patience": args.patience,
    }


def _config(args: argparse.Namespace) -> TrainConfig:
    return load_config(args.config, _overrides(args))


def _out_dir(args: argparse.Namespace) -> Path:
    out_dir = Path(args.out_dir) if args.out_dir else default_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _graph(args: argparse.Namespace) -> AttributedGraph:
    if not args.edges or not args.features:
        raise ConfigurationError("--edges and --features are required for this command")
    return load_graph(args.edges, args.features, args.labels)


def _digests(args: argparse.Namespace) -> Dict[str, str]:
    digests = {}
    for name in ("edges", "features", "labels", "config"):
        path = getattr(args, name)
        if path:
            digests[name] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digests


def _emit(reports: Sequence[MetricReport]) -> None:
    for report in reports:
        print(report.model_dump_json(), flush=True)


def _classification_reports(
    graph: AttributedGraph, embeddings: Any, config: TrainConfig
) -> List[MetricReport]:
    if graph.labels is None:
        raise ConfigurationError("node classification needs a --labels file")
    f1_micro, f1_macro = classify(embeddings, graph.labels, folds=5, seed=config.seed)
    echo = config.model_dump(mode="json")
    return [
        MetricReport(task="nc", metric="f1_micro", value=f1_micro, config=echo, seed=config.seed),
        MetricReport(task="nc", metric="f1_macro", value=f1_macro, config=echo, seed=config.seed),
    ]


def cmd_train(args: argparse.Namespace) -> int:
    """Train once and write snapshot, embeddings, metrics log, reports and manifest."""
    started = time.perf_counter()
    config = _config(args)
    out_dir = _out_dir(args)
    graph = _graph(args)
    if config.task is Task.NODE_CLASSIFICATION and graph.labels is None:
        raise ConfigurationError("node classification needs a --labels file")
    loaded = time.perf_counter()

    metrics_path = out_dir / "metrics.jsonl"
    with metrics_path.open("w") as metrics_log:

        def on_epoch(metrics: EpochMetrics) -> None:
            print(metrics.model_dump_json(), flush=True)
            metrics_log.write(json.dumps(metrics.log_record()) + "\n")

        result = train(graph, config, on_epoch=on_epoch)
    trained = time.perf_counter()

    snapshot_path = SnapshotStore(out_dir).save(result)
    embeddings_path = write_embeddings_csv(result.node_embeddings(), out_dir / "embeddings.csv")
    if config.task is Task.NODE_CLASSIFICATION:
        reports = _classification_reports(graph, result.node_embeddings(), config)
    else:
        reports = link_prediction_reports(result, task="lp")
    report_path = write_reports_jsonl(reports, out_dir / "report.jsonl")
    _emit(reports)
    finished = time.perf_counter()

    manifest = RunManifest(
        command="train",
        config=config.model_dump(mode="json"),
        seed=config.seed,
        input_digests=_digests(args),
        artifacts={
            "snapshot": str(snapshot_path),
            "embeddings": str(embeddings_path),
            "metrics": str(metrics_path),
            "report": str(report_path),
        },
        timings={
            "load": loaded - started,
            "train": trained - loaded,
            "evaluate": finished - trained,
            "total": finished - started,
        },
        epoch_seconds=[m.seconds for m in result.history],
    )
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(manifest.model_dump_json(indent=2))
    logger.info(f"Wrote manifest to {manifest_path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Score a saved snapshot on link prediction or node classification."""
    out_dir = _out_dir(args)
    snapshot = Path(args.snapshot) if args.snapshot else out_dir / "snapshot.npz"
    state, meta = SnapshotStore(snapshot.parent).load(snapshot)
    check_compatible(meta, k=args.k, dim=args.dim, alpha=args.alpha)

    # The operator must be rebuilt with the alpha the snapshot was trained with
    updates: Dict[str, Any] = {"alpha": meta.alpha}
    try:
        stored = TrainConfig.model_validate({**meta.config, **updates})
        if args.task is not None:
            updates["task"] = args.task
        if args.seed is not None:
            updates["seed"] = args.seed
        config = TrainConfig.model_validate({**meta.config, **updates})
    except ValidationError as e:
        raise CompatibilityError(f"snapshot configuration is not usable: {e}") from e
    if config.task is Task.LINK_PREDICTION and stored.task is not Task.LINK_PREDICTION:
        raise CompatibilityError(
            f"snapshot was trained for {stored.task.value} and held out no test edges; "
            "it cannot be scored on link prediction"
        )
    graph = _graph(args)
    if config.task is Task.NODE_CLASSIFICATION and graph.labels is None:
        raise ConfigurationError("node classification needs a --labels file")

    # Reproduce the training split so held-out edges stay unseen
    train_frac, test_frac, val_frac = stored.split_fractions()
    split = split_edges(graph, train_frac, test_frac, val_frac, seed=stored.seed)
    op, _ = prepare_operators(split.train_graph, config)
    if op.size != state.base.shape[0]:
        raise CompatibilityError(
            f"snapshot holds {state.base.shape[0]} entities, graph has {op.size}"
        )

    if config.task is Task.NODE_CLASSIFICATION:
        embeddings = propagate.forward(op, state.base, config.k).final_node_embeddings(op.n)
        reports = _classification_reports(graph, embeddings, config)
    else:
        scores = evaluate_link_prediction(state, op, split, config)
        echo = config.model_dump(mode="json")
        reports = [
            MetricReport(task="lp", metric=name, value=value, config=echo, seed=config.seed)
            for name, value in scores.items()
        ]
    _emit(reports)
    return EXIT_OK


def _write_sweep(
    reports: List[MetricReport], out_dir: Path, name: str, by: str = "setting"
) -> None:
    write_reports_jsonl(reports, out_dir / f"{name}.jsonl")
    write_sweep_csv(reports, out_dir / f"{name}.csv", by="task" if by == "task" else "setting")
    _emit(reports)


def cmd_ablate(args: argparse.Namespace) -> int:
    """All four variants on one split; JSON lines plus a comparison CSV."""
    config, out_dir, graph = _config(args), _out_dir(args), _graph(args)
    _write_sweep(run_ablation(graph, config), out_dir, "ablation", by="task")
    return EXIT_OK


def cmd_perturb_sweep(args: argparse.Namespace) -> int:
    config, out_dir, graph = _config(args), _out_dir(args), _graph(args)
    _write_sweep(robustness_sweep(graph, config, args.ratios), out_dir, "robustness")
    return EXIT_OK


def cmd_topn_sweep(args: argparse.Namespace) -> int:
    config, out_dir, graph = _config(args), _out_dir(args), _graph(args)
    values = [int(v) for v in args.values]
    _write_sweep(topn_sweep(graph, config, values), out_dir, "topn")
    return EXIT_OK


def cmd_sensitivity_sweep(args: argparse.Namespace) -> int:
    config, out_dir, graph = _config(args), _out_dir(args), _graph(args)
    reports = sensitivity_sweep(graph, config, args.param, args.values)
    _write_sweep(reports, out_dir, f"sensitivity_{args.param}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Run the finite-difference suites; exit 1 if any error reaches the threshold."""
    report = run_gradcheck(
        instances=args.instances,
        seed=args.seed if args.seed is not None else 0,
        dim=args.dim,
        k=args.k,
        threshold=args.threshold,
    )
    for result in report.results:
        print(result.model_dump_json(), flush=True)
    if not report.passed:
        names = ", ".join(f"{r.suite}/{r.parameter}" for r in report.failures)
        print(f"Gradient check failed: {names}", file=sys.stderr)
        return EXIT_FAILURE
    logger.info(f"All gradient checks passed (max relative error {report.max_rel_error:.2e})")
    return EXIT_OK


def cmd_dump_operator(args: argparse.Namespace) -> int:
    """Write the transition operator of the full input graph."""
    config, out_dir, graph = _config(args), _out_dir(args), _graph(args)
    features = graph.features
    if config.topn is not None:
        features = topn_sparsify(features, config.topn)
    op = build_transition(graph.adjacency, features, config.effective_alpha)
    dump_operator(op, Path(args.output) if args.output else out_dir / "operator.tsv")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the chosen command and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return int(args.handler(args))
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130
    except (FileNotFoundError, ConfigurationError, GraphParseError, BoundsError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except AugnetError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
