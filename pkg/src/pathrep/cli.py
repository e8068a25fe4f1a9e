"""Command-line pipeline: build graphs, synthesize or route trips, encode,
train, evaluate and compare.

Each subcommand covers one pipeline stage so intermediate artifacts (trip
files, routed datasets, feature matrices, models, reports) are plain files;
`compare` chains everything from a single config.  Exit codes: 0 success,
1 usage error, 2 data error, 3 training failure.  Logs go to stderr only,
machine-readable output goes to stdout or to --out files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .encode import (
    KINDS,
    ReprConfig,
    encode_dataset,
    matrix_cost,
    repr_cost,
    save_matrix,
)
from .errors import DataError, PathrepError, TrainingError
from .eval import (
    CostProfile,
    EvalReport,
    baseline_cell,
    emit_report,
    format_report,
    kfold_split,
    load_experiment_config,
    model_cell,
    parse_report,
    repr_label,
    run_experiment,
)
from .graph import Coordinate, load_graph, save_edge_file, save_node_file
from .ingest import (
    AreaEffect,
    SyntheticTipModel,
    balance_dataset,
    generate_grid_graph,
    generate_synthetic_trips,
    load_dataset,
    load_trips,
    save_dataset,
    save_trips,
    snap_and_route,
    trip_columns_for,
)
from .models import (
    ForestHyperparams,
    MlpHyperparams,
    save_model,
    train_baseline_area,
    train_baseline_overall,
    train_forest,
    train_mlp,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

log = logging.getLogger("pathrep")


class _UsageError(Exception):
    """Raised instead of argparse's exit(2) so usage problems exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


# --- shared flag groups -------------------------------------------------------

def _add_graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph-nodes", required=True, help="node file: id,lon,lat")
    p.add_argument("--graph-edges", required=True, help="edge file: id_from,id_to[,length_m]")


def _add_repr_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--repr", choices=KINDS, help="input representation")
    p.add_argument("--S", type=int, default=None, help="sub-path count (temporal_subpaths)")
    p.add_argument("--NS", type=int, default=None, help="nodes per sub-path (temporal_subpaths)")
    p.add_argument("--k", type=int, default=None, help="neighborhood hops (k_neighbors kinds)")


def _repr_config(args: argparse.Namespace) -> ReprConfig:
    if not args.repr:
        raise _UsageError("--repr is required for this command")
    try:
        return ReprConfig(kind=args.repr, S=args.S, N_S=args.NS, k=args.k).require()
    except DataError as exc:
        raise _UsageError(str(exc)) from None


def _load_graph(args: argparse.Namespace):
    return load_graph(args.graph_nodes, args.graph_edges)


def _mlp_params(args: argparse.Namespace) -> MlpHyperparams:
    kwargs: dict = {"seed": args.seed}
    if args.learning_rate is not None:
        kwargs["learning_rate"] = args.learning_rate
    if args.epochs is not None:
        kwargs["epochs"] = args.epochs
    return MlpHyperparams(**kwargs)


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from None


# --- subcommand handlers --------------------------------------------------------

def _cmd_graph_build(args) -> int:
    g = _load_graph(args)
    if args.out:
        save_node_file(f"{args.out}.nodes.csv", g)
        save_edge_file(f"{args.out}.edges.csv", g)
        log.info("wrote %s.nodes.csv and %s.edges.csv", args.out, args.out)
    planar = "true" if g.planar else "false"
    sys.stdout.write(f"nodes={g.n_nodes} edges={g.n_edges} planar={planar}\n")
    return EXIT_OK


def _cmd_synth_graph(args) -> int:
    g = generate_grid_graph(args.width, args.height, args.spacing_m)
    save_node_file(f"{args.out}.nodes.csv", g)
    save_edge_file(f"{args.out}.edges.csv", g)
    log.info("grid %dx%d: %d nodes, %d edges", args.width, args.height, g.n_nodes, g.n_edges)
    return EXIT_OK


def _parse_area(text: str) -> AreaEffect:
    parts = text.split(",")
    if len(parts) != 4:
        raise _UsageError(f"--area expects x,y,radius_m,bonus, got {text!r}")
    try:
        x, y, r, bonus = (float(v) for v in parts)
        return AreaEffect(Coordinate(x, y), radius_m=r, bonus=bonus)
    except (ValueError, DataError) as exc:
        raise _UsageError(f"bad --area {text!r}: {exc}") from None


def _cmd_synth_trips(args) -> int:
    g = _load_graph(args)
    model = SyntheticTipModel(
        per_meter_rate=args.per_meter_rate,
        area_effects=tuple(_parse_area(a) for a in args.area or []),
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    trips = generate_synthetic_trips(g, args.n, model)
    save_trips(args.out, trips, trip_columns_for(args.target))
    log.info("wrote %d synthetic trips to %s", len(trips), args.out)
    return EXIT_OK


def _cmd_snap(args) -> int:
    g = _load_graph(args)
    trips, dropped_rows = load_trips(args.trips, trip_columns_for(args.target))
    if dropped_rows:
        log.info("load_trips dropped %d rows", dropped_rows)
    ds, dropped_trips = snap_and_route(g, trips, workers=args.workers)
    if dropped_trips:
        log.info("snap_and_route dropped %d unroutable trips", dropped_trips)
    save_dataset(args.out, ds)
    log.info("wrote %d routed trips to %s", len(ds), args.out)
    return EXIT_OK


def _cmd_balance(args) -> int:
    g = _load_graph(args)
    ds = load_dataset(args.dataset, g)
    balanced = balance_dataset(ds, args.bin_width, args.lo, args.hi, seed=args.seed)
    save_dataset(args.out, balanced)
    log.info("balanced %d rows down to %d", len(ds), len(balanced))
    return EXIT_OK


def _cmd_encode(args) -> int:
    g = _load_graph(args)
    ds = load_dataset(args.dataset, g)
    rc = _repr_config(args)
    matrix = encode_dataset(g, ds, rc, workers=args.workers)
    save_matrix(args.out, matrix)
    cost = matrix_cost(matrix)
    log.info(
        "encoded %d rows, %d features, %.2f mean nonzeros",
        cost.n_rows, cost.n_features, cost.mean_nonzeros,
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    g = _load_graph(args)
    ds = load_dataset(args.dataset, g)
    if args.model == "baseline-overall":
        model = train_baseline_overall(ds.targets)
    elif args.model == "baseline-area":
        radius = args.radius_m if args.radius_m is not None else 500.0
        model = train_baseline_area(ds.trips, radius, g.planar)
    else:
        rc = _repr_config(args)
        matrix = encode_dataset(g, ds, rc, workers=args.workers)
        if args.model == "forest":
            model = train_forest(matrix, ForestHyperparams(seed=args.seed), workers=args.workers)
        else:
            model = train_mlp(matrix, _mlp_params(args))
    save_model(args.out, model)
    log.info("wrote %s model to %s", args.model, args.out)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    g = _load_graph(args)
    ds = load_dataset(args.dataset, g)
    plan = kfold_split(len(ds), args.folds, args.seed)
    if args.model in ("baseline-overall", "baseline-area"):
        name = args.model.replace("-", "_")
        if args.radius_m is not None:
            cell = baseline_cell(ds, plan, name, (args.radius_m,))
        else:
            cell = baseline_cell(ds, plan, name)
        costs: tuple[CostProfile, ...] = ()
    else:
        rc = _repr_config(args)
        matrix = encode_dataset(g, ds, rc, workers=args.workers)
        cost = matrix_cost(matrix)
        costs = (
            CostProfile(
                representation=repr_label(rc),
                n_features=cost.n_features,
                mean_nonzeros=cost.mean_nonzeros,
                max_nonzeros=cost.max_nonzeros,
                total_set_bits=cost.total_set_bits,
            ),
        )
        params = (
            ForestHyperparams(seed=args.seed)
            if args.model == "forest"
            else _mlp_params(args)
        )
        cell = model_cell(matrix, plan, params, repr_label(rc), args.model, workers=args.workers)
    report = EvalReport(
        n_rows=len(ds), folds=args.folds, seed=args.seed, cells=(cell,), costs=costs
    )
    emit_report(report, args.out, fmt=args.format)
    if cell.error:
        raise TrainingError(cell.error)
    log.info("mean RMSE %.4f over %d folds", cell.mean_rmse, args.folds)
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.seed is not None:
        cfg.seed = args.seed
    if args.folds is not None:
        cfg.folds = args.folds
    report = run_experiment(cfg)
    emit_report(report, args.out, fmt=args.format)
    sys.stdout.write(format_report(report, "table"))
    return EXIT_OK


def _cmd_cost(args) -> int:
    g = _load_graph(args)
    ds = load_dataset(args.dataset, g)
    rc = _repr_config(args)
    cost = repr_cost(rc, g, ds)
    _write_or_print(json.dumps(cost.as_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = parse_report(args.report)
    _write_or_print(format_report(report, args.format), args.out)
    return EXIT_OK


# --- parser wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pathrep", description=__doc__.splitlines()[0])
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="-v for progress, -vv for debug (stderr only)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("graph-build", help="load, validate and normalize a graph")
    _add_graph_flags(p)
    p.add_argument("--out", help="prefix for normalized .nodes.csv/.edges.csv copies")
    p.set_defaults(func=_cmd_graph_build)

    p = sub.add_parser("synth-graph", help="write a synthetic grid graph")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--spacing-m", type=float, required=True)
    p.add_argument("--out", required=True, help="prefix for .nodes.csv/.edges.csv")
    p.set_defaults(func=_cmd_synth_graph)

    p = sub.add_parser("synth-trips", help="sample synthetic trips on a graph")
    _add_graph_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of trips")
    p.add_argument("--per-meter-rate", type=float, required=True, help="dollars per meter")
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument(
        "--area", action="append", metavar="X,Y,RADIUS_M,BONUS",
        help="flat bonus near a point; repeatable",
    )
    p.add_argument("--target", choices=("tip", "fare"), default="tip")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trip CSV destination")
    p.set_defaults(func=_cmd_synth_trips)

    p = sub.add_parser("snap", help="snap trips to nodes and route them")
    _add_graph_flags(p)
    p.add_argument("--trips", required=True, help="trip CSV")
    p.add_argument("--target", choices=("tip", "fare"), default="tip")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="routed dataset destination")
    p.set_defaults(func=_cmd_snap)

    p = sub.add_parser("balance", help="downsample target bins to equal counts")
    _add_graph_flags(p)
    p.add_argument("--dataset", required=True, help="routed dataset from snap")
    p.add_argument("--bin-width", type=float, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("encode", help="encode a routed dataset as sparse vectors")
    _add_graph_flags(p)
    p.add_argument("--dataset", required=True, help="routed dataset from snap")
    _add_repr_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="sparse matrix destination")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("train", help="train one model on the full dataset")
    _add_graph_flags(p)
    p.add_argument("--dataset", required=True)
    _add_repr_flags(p)
    p.add_argument(
        "--model", required=True,
        choices=("forest", "mlp", "baseline-overall", "baseline-area"),
    )
    p.add_argument("--radius-m", type=float, default=None, help="baseline-area radius")
    p.add_argument("--learning-rate", type=float, default=None, help="mlp step size")
    p.add_argument("--epochs", type=int, default=None, help="mlp training epochs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="model file destination")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="k-fold score one (representation, model) pair")
    _add_graph_flags(p)
    p.add_argument("--dataset", required=True)
    _add_repr_flags(p)
    p.add_argument(
        "--model", required=True,
        choices=("forest", "mlp", "baseline-overall", "baseline-area"),
    )
    p.add_argument("--radius-m", type=float, default=None, help="fixed baseline-area radius")
    p.add_argument("--learning-rate", type=float, default=None, help="mlp step size")
    p.add_argument("--epochs", type=int, default=None, help="mlp training epochs")
    p.add_argument("--folds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("json", "table", "plotdata"), default="json")
    p.add_argument("--out", required=True, help="report destination")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="run the full experiment from a config file")
    p.add_argument("--config", required=True, help="experiment TOML")
    p.add_argument("--workers", type=int, default=None, help="override config workers")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--folds", type=int, default=None, help="override config folds")
    p.add_argument("--format", choices=("json", "table", "plotdata"), default="json")
    p.add_argument("--out", required=True, help="report destination")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("cost", help="representation footprint on a dataset")
    _add_graph_flags(p)
    p.add_argument("--dataset", required=True)
    _add_repr_flags(p)
    p.add_argument("--out", default=None, help="JSON destination (default stdout)")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("report", help="re-render a JSON report as table or plotdata")
    p.add_argument("--report", required=True, help="report JSON from evaluate/compare")
    p.add_argument("--format", choices=("json", "table", "plotdata"), default="table")
    p.add_argument("--out", default=None, help="destination (default stdout)")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except PathrepError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
