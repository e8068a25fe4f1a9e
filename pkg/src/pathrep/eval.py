"""Cross-validation harness: fold plans, RMSE, experiments, report emission.

Reports are canonical: the emitted bytes are a pure function of data, config
and seed.  Wall-clock training times live on the in-memory report (and in
logs) but are excluded from files and from report equality, since they can
never be reproducible.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .encode import ReprConfig, encode_dataset, matrix_cost
from .errors import DataError, TrainingError
from .graph import Coordinate, Graph, load_graph
from .ingest import (
    AreaEffect,
    PathDataset,
    SyntheticTipModel,
    balance_dataset,
    generate_grid_graph,
    generate_synthetic_trips,
    load_trips,
    snap_and_route,
    trip_columns_for,
)
from .models import (
    DEFAULT_AREA_RADII_M,
    ForestHyperparams,
    MlpHyperparams,
    predict_baseline,
    train_baseline_area,
    train_baseline_overall,
    train_forest,
    train_mlp,
    tune_area_radius,
)

log = logging.getLogger("pathrep")


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every sample to exactly one validation fold."""

    n_samples: int
    k: int
    seed: int
    assignment: np.ndarray  # int32, fold id per sample

    def splits(self):
        """Yield (train_indices, val_indices) per fold, ascending order."""
        for f in range(self.k):
            val = np.flatnonzero(self.assignment == f)
            train = np.flatnonzero(self.assignment != f)
            yield train, val


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle, then round-robin fold ids; sizes differ by <= 1."""
    if k < 2:
        raise DataError("need k >= 2 folds")
    if k > n:
        raise DataError(f"cannot split {n} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int32)
    assignment[perm] = np.arange(n, dtype=np.int32) % k
    return FoldPlan(n_samples=n, k=k, seed=seed, assignment=assignment)


def rmse(predicted, actual) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape or predicted.ndim != 1:
        raise DataError("rmse needs two equal-length vectors")
    if len(predicted) == 0:
        raise DataError("rmse of empty vectors")
    err = predicted - actual
    return math.sqrt(float(np.mean(err * err)))


# --- experiment configuration ----------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything run_experiment needs, parseable from a TOML file."""

    seed: int = 0
    folds: int = 20
    workers: int = 1
    target: str = "tip"
    graph_nodes: Optional[str] = None
    graph_edges: Optional[str] = None
    grid: Optional[tuple[int, int, float]] = None  # width, height, spacing_m
    trips_file: Optional[str] = None
    synthetic: Optional[SyntheticTipModel] = None
    synthetic_n: int = 0
    balance: Optional[tuple[float, float, float]] = None  # bin_width, lo, hi
    representations: list[ReprConfig] = field(default_factory=list)
    models: list = field(default_factory=list)
    area_radii: tuple[float, ...] = DEFAULT_AREA_RADII_M
    raw: dict = field(default_factory=dict)


def load_experiment_config(path) -> ExperimentConfig:
    import tomli

    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise DataError(f"{path}: invalid TOML: {exc}") from None
    return experiment_config_from_dict(doc)


def experiment_config_from_dict(doc: dict) -> ExperimentConfig:
    exp = doc.get("experiment", {})
    cfg = ExperimentConfig(
        seed=int(exp.get("seed", 0)),
        folds=int(exp.get("folds", 20)),
        workers=int(exp.get("workers", 1)),
        target=str(exp.get("target", "tip")),
        raw=doc,
    )
    graph = doc.get("graph", {})
    if "synthetic" in graph:
        s = graph["synthetic"]
        cfg.grid = (int(s["width"]), int(s["height"]), float(s["spacing_m"]))
    elif graph:
        cfg.graph_nodes = graph.get("nodes")
        cfg.graph_edges = graph.get("edges")
        if not (cfg.graph_nodes and cfg.graph_edges):
            raise DataError("config [graph] needs nodes and edges paths")
    trips = doc.get("trips", {})
    if "synthetic" in trips:
        s = trips["synthetic"]
        areas = tuple(
            AreaEffect(
                Coordinate(float(a["x"]), float(a["y"])),
                radius_m=float(a["radius_m"]),
                bonus=float(a["bonus"]),
            )
            for a in s.get("areas", [])
        )
        cfg.synthetic = SyntheticTipModel(
            per_meter_rate=float(s["per_meter_rate"]),
            area_effects=areas,
            noise_sd=float(s.get("noise_sd", 0.0)),
            seed=int(s.get("seed", cfg.seed)),
        )
        cfg.synthetic_n = int(s["n"])
    elif trips:
        cfg.trips_file = trips.get("file")
        if not cfg.trips_file:
            raise DataError("config [trips] needs a file path")
    if "balance" in doc:
        b = doc["balance"]
        cfg.balance = (float(b["bin_width"]), float(b["lo"]), float(b["hi"]))
    for r in doc.get("representations", []):
        cfg.representations.append(
            ReprConfig(
                kind=r["kind"],
                S=int(r["S"]) if "S" in r else None,
                N_S=int(r["N_S"]) if "N_S" in r else None,
                k=int(r["k"]) if "k" in r else None,
            ).require()
        )
    for m in doc.get("models", []):
        cfg.models.append(_model_params_from_dict(m))
    if "baseline" in doc:
        radii = doc["baseline"].get("radii_m")
        if radii:
            cfg.area_radii = tuple(float(r) for r in radii)
    return cfg


def _model_params_from_dict(m: dict):
    kind = m.get("kind")
    body = {k: v for k, v in m.items() if k != "kind"}
    try:
        if kind == "forest":
            return ForestHyperparams(**body)
        if kind == "mlp":
            return MlpHyperparams(**body)
    except TypeError as exc:
        raise DataError(f"bad {kind} parameters: {exc}") from None
    raise DataError(f"unknown model kind {kind!r} in config")


# --- report types -----------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    """One (representation, model) pairing scored across all folds."""

    representation: str
    model: str
    fold_rmses: tuple[float, ...] = ()
    mean_rmse: Optional[float] = None
    std_rmse: Optional[float] = None
    error: Optional[str] = None
    train_seconds: float = field(default=0.0, compare=False)


def make_cell(representation, model, fold_rmses, train_seconds=0.0, error=None) -> CellResult:
    fold_rmses = tuple(float(r) for r in fold_rmses)
    if error is not None:
        return CellResult(representation, model, (), None, None, error, train_seconds)
    mean = sum(fold_rmses) / len(fold_rmses)
    std = math.sqrt(sum((r - mean) ** 2 for r in fold_rmses) / len(fold_rmses))
    return CellResult(representation, model, fold_rmses, mean, std, None, train_seconds)


@dataclass(frozen=True)
class CostProfile:
    representation: str
    n_features: int
    mean_nonzeros: float
    max_nonzeros: int
    total_set_bits: int


@dataclass(frozen=True)
class EvalReport:
    n_rows: int
    folds: int
    seed: int
    cells: tuple[CellResult, ...]
    costs: tuple[CostProfile, ...]
    config_echo: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.cells:
            raise DataError("a report needs at least one result cell")


def repr_label(cfg: ReprConfig) -> str:
    if cfg.kind == "temporal_subpaths":
        return f"temporal_subpaths[S={cfg.S},N_S={cfg.N_S}]"
    if cfg.kind in ("k_neighbors", "three_steps_kn"):
        return f"{cfg.kind}[k={cfg.k}]"
    return cfg.kind


def _model_labels(models: Sequence) -> list[str]:
    labels = []
    seen: dict[str, int] = {}
    for m in models:
        kind = "forest" if isinstance(m, ForestHyperparams) else "mlp"
        seen[kind] = seen.get(kind, 0) + 1
        labels.append(kind if seen[kind] == 1 else f"{kind}#{seen[kind]}")
    return labels


# --- the experiment runner ----------------------------------------------------

def load_experiment_data(cfg: ExperimentConfig) -> tuple[Graph, PathDataset]:
    """Materialize the graph and the routed (optionally balanced) dataset."""
    if cfg.grid is not None:
        g = generate_grid_graph(*cfg.grid)
    elif cfg.graph_nodes:
        g = load_graph(cfg.graph_nodes, cfg.graph_edges)
    else:
        raise DataError("config names no graph source")
    if cfg.synthetic is not None:
        trips = generate_synthetic_trips(g, cfg.synthetic_n, cfg.synthetic)
    elif cfg.trips_file:
        trips, dropped = load_trips(cfg.trips_file, trip_columns_for(cfg.target))
        if dropped:
            log.info("load_trips dropped %d rows", dropped)
    else:
        raise DataError("config names no trip source")
    ds, dropped = snap_and_route(g, trips, workers=cfg.workers)
    if dropped:
        log.info("snap_and_route dropped %d trips", dropped)
    if cfg.balance is not None:
        bin_width, lo, hi = cfg.balance
        ds = balance_dataset(ds, bin_width, lo, hi, seed=cfg.seed)
        log.info("balanced dataset to %d rows", len(ds))
    return g, ds


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """Score baselines plus every (representation, model) pair on shared folds."""
    if not cfg.representations and cfg.models:
        raise DataError("models configured but no representations")
    g, ds = load_experiment_data(cfg)
    plan = kfold_split(len(ds), cfg.folds, cfg.seed)
    cells: list[CellResult] = [
        baseline_cell(ds, plan, "baseline_overall", cfg.area_radii),
        baseline_cell(ds, plan, "baseline_area", cfg.area_radii),
    ]
    costs: list[CostProfile] = []
    model_labels = _model_labels(cfg.models)
    for rc in cfg.representations:
        label = repr_label(rc)
        matrix = encode_dataset(g, ds, rc, workers=cfg.workers)
        cost = matrix_cost(matrix)
        costs.append(
            CostProfile(
                representation=label,
                n_features=cost.n_features,
                mean_nonzeros=cost.mean_nonzeros,
                max_nonzeros=cost.max_nonzeros,
                total_set_bits=cost.total_set_bits,
            )
        )
        for params, mlabel in zip(cfg.models, model_labels):
            cells.append(model_cell(matrix, plan, params, label, mlabel, cfg.workers))
    report = EvalReport(
        n_rows=len(ds),
        folds=cfg.folds,
        seed=cfg.seed,
        cells=tuple(cells),
        costs=tuple(costs),
        config_echo=cfg.raw,
    )
    for cell in report.cells:
        if cell.error:
            log.warning("cell %s/%s failed: %s", cell.representation, cell.model, cell.error)
        else:
            log.info(
                "cell %s/%s mean RMSE %.4f (train %.2fs)",
                cell.representation,
                cell.model,
                cell.mean_rmse,
                cell.train_seconds,
            )
    return report


def baseline_cell(
    ds: PathDataset,
    plan: FoldPlan,
    model: str,
    area_radii: Sequence[float] = DEFAULT_AREA_RADII_M,
) -> CellResult:
    """Score baseline_overall or baseline_area across the plan's folds.

    The area radius is tuned per fold over area_radii unless exactly one
    radius is given.
    """
    planar = ds.graph.planar
    fold_rmses = []
    started = time.perf_counter()
    for train_idx, val_idx in plan.splits():
        train_trips = [ds.trips[i] for i in train_idx]
        val_trips = [ds.trips[i] for i in val_idx]
        val_targets = ds.targets[val_idx]
        if model == "baseline_overall":
            m = train_baseline_overall(ds.targets[train_idx])
        else:
            if len(area_radii) == 1:
                r = area_radii[0]
            else:
                r = tune_area_radius(train_trips, val_trips, planar, area_radii)
            m = train_baseline_area(train_trips, r, planar)
        fold_rmses.append(rmse(predict_baseline(m, val_trips), val_targets))
    return make_cell("-", model, fold_rmses, time.perf_counter() - started)


def model_cell(
    matrix, plan, params, repr_lbl: str, model_lbl: str, workers: int = 1
) -> CellResult:
    """Score one (representation, model) pairing; training failure is recorded."""
    fold_rmses = []
    train_time = 0.0
    for train_idx, val_idx in plan.splits():
        train = matrix.subset(train_idx)
        val = matrix.subset(val_idx)
        started = time.perf_counter()
        try:
            if isinstance(params, ForestHyperparams):
                model = train_forest(train, params, workers=workers)
            else:
                model = train_mlp(train, params)
        except TrainingError as exc:
            return make_cell(repr_lbl, model_lbl, (), error=str(exc))
        train_time += time.perf_counter() - started
        fold_rmses.append(rmse(model.predict(val), val.targets))
    return make_cell(repr_lbl, model_lbl, fold_rmses, train_time)


# --- report emission -----------------------------------------------------------

_REPORT_FORMAT = "pathrep-report"
_REPORT_VERSION = 1


def format_report(report: EvalReport, fmt: str = "json") -> str:
    """Render the report: fmt is json (canonical), table, or plotdata."""
    if fmt == "json":
        return _report_json(report)
    if fmt == "table":
        return _report_table(report)
    if fmt == "plotdata":
        return _report_plotdata(report)
    raise DataError(f"unknown report format {fmt!r}")


def emit_report(report: EvalReport, path, fmt: str = "json") -> None:
    """Write the rendered report to a file."""
    text = format_report(report, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write report to {path}: {exc}") from None


def _report_json(report: EvalReport) -> str:
    doc = {
        "format": _REPORT_FORMAT,
        "version": _REPORT_VERSION,
        "n_rows": report.n_rows,
        "folds": report.folds,
        "seed": report.seed,
        "cells": [
            {
                "representation": c.representation,
                "model": c.model,
                "fold_rmses": list(c.fold_rmses),
                "mean_rmse": c.mean_rmse,
                "std_rmse": c.std_rmse,
                "error": c.error,
            }
            for c in report.cells
        ],
        "costs": [
            {
                "representation": c.representation,
                "n_features": c.n_features,
                "mean_nonzeros": c.mean_nonzeros,
                "max_nonzeros": c.max_nonzeros,
                "total_set_bits": c.total_set_bits,
            }
            for c in report.costs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_report(path) -> EvalReport:
    """Read a json-format report back; timings are not stored in files."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot parse report {path}: {exc}") from None
    if doc.get("format") != _REPORT_FORMAT or doc.get("version") != _REPORT_VERSION:
        raise DataError(f"{path}: not a report file")
    cells = tuple(
        CellResult(
            representation=c["representation"],
            model=c["model"],
            fold_rmses=tuple(c["fold_rmses"]),
            mean_rmse=c["mean_rmse"],
            std_rmse=c["std_rmse"],
            error=c["error"],
        )
        for c in doc["cells"]
    )
    costs = tuple(
        CostProfile(
            representation=c["representation"],
            n_features=c["n_features"],
            mean_nonzeros=c["mean_nonzeros"],
            max_nonzeros=c["max_nonzeros"],
            total_set_bits=c["total_set_bits"],
        )
        for c in doc["costs"]
    )
    return EvalReport(
        n_rows=doc["n_rows"],
        folds=doc["folds"],
        seed=doc["seed"],
        cells=cells,
        costs=costs,
    )


def _report_table(report: EvalReport) -> str:
    rows = [("representation", "model", "mean_rmse", "std_rmse", "folds")]
    for c in report.cells:
        if c.error:
            rows.append((c.representation, c.model, "FAILED", "-", "-"))
        else:
            rows.append(
                (
                    c.representation,
                    c.model,
                    f"{c.mean_rmse:.4f}",
                    f"{c.std_rmse:.4f}",
                    str(len(c.fold_rmses)),
                )
            )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.append("")
    lines.append(f"rows={report.n_rows} folds={report.folds} seed={report.seed}")
    if report.costs:
        lines.append("")
        lines.append("representation costs:")
        for c in report.costs:
            lines.append(
                f"  {c.representation}: n_features={c.n_features} "
                f"mean_nonzeros={c.mean_nonzeros:.2f} max={c.max_nonzeros} "
                f"total_bits={c.total_set_bits}"
            )
    return "\n".join(lines) + "\n"


def _report_plotdata(report: EvalReport) -> str:
    lines = ["representation,model,mean_rmse,std_rmse"]
    for c in report.cells:
        if c.error:
            continue
        lines.append(f"{c.representation},{c.model},{c.mean_rmse!r},{c.std_rmse!r}")
    return "\n".join(lines) + "\n"
