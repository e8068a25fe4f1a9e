"""Fold plans, RMSE, experiment configs, the experiment runner, and reports."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from pathrep.encode import ReprConfig
from pathrep.errors import DataError
from pathrep.eval import (
    EvalReport,
    ExperimentConfig,
    emit_report,
    experiment_config_from_dict,
    kfold_split,
    load_experiment_config,
    make_cell,
    parse_report,
    repr_label,
    rmse,
    run_experiment,
)
from pathrep.ingest import SyntheticTipModel
from pathrep.models import ForestHyperparams, MlpHyperparams


# --- kfold_split -------------------------------------------------------------

def test_two_folds_of_two():
    plan = kfold_split(4, 2, seed=0)
    sizes = sorted(np.sum(plan.assignment == f) for f in range(2))
    assert sizes == [2, 2]


def test_remainder_goes_to_early_folds():
    plan = kfold_split(10, 3, seed=0)
    sizes = sorted((int(np.sum(plan.assignment == f)) for f in range(3)), reverse=True)
    assert sizes == [4, 3, 3]


def test_random_plans_partition_indices():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(2, 200))
        k = int(rng.integers(2, min(n, 25) + 1))
        plan = kfold_split(n, k, seed=int(rng.integers(0, 1000)))
        folds = [np.flatnonzero(plan.assignment == f) for f in range(k)]
        assert sum(len(f) for f in folds) == n
        assert len(np.unique(np.concatenate(folds))) == n
        assert max(len(f) for f in folds) - min(len(f) for f in folds) <= 1


def test_splits_cover_each_fold_once():
    plan = kfold_split(11, 4, seed=5)
    vals = []
    for train, val in plan.splits():
        assert np.array_equal(np.sort(np.concatenate([train, val])), np.arange(11))
        vals.append(val)
    assert len(vals) == 4
    assert np.array_equal(np.sort(np.concatenate(vals)), np.arange(11))


def test_same_seed_same_plan():
    a = kfold_split(50, 5, seed=9)
    b = kfold_split(50, 5, seed=9)
    assert np.array_equal(a.assignment, b.assignment)
    c = kfold_split(50, 5, seed=10)
    assert not np.array_equal(a.assignment, c.assignment)


def test_kfold_rejects_bad_k():
    with pytest.raises(DataError):
        kfold_split(5, 1, seed=0)
    with pytest.raises(DataError):
        kfold_split(5, 6, seed=0)


# --- rmse ---------------------------------------------------------------------

def test_rmse_zero_when_equal():
    v = np.array([1.0, 2.0, 3.5])
    assert rmse(v, v) == 0.0


def test_rmse_two_terms():
    assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_rmse_against_two_pass_oracle():
    rng = np.random.default_rng(33)
    for _ in range(20):
        n = int(rng.integers(1, 1000))
        p = rng.uniform(-100, 100, size=n)
        a = rng.uniform(-100, 100, size=n)
        expected = math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(p, a)) / n)
        assert rmse(p, a) == pytest.approx(expected, abs=1e-12)


def test_rmse_permutation_invariant():
    rng = np.random.default_rng(34)
    p = rng.uniform(0, 10, size=40)
    a = rng.uniform(0, 10, size=40)
    perm = rng.permutation(40)
    assert rmse(p, a) == pytest.approx(rmse(p[perm], a[perm]), abs=1e-12)


def test_rmse_rejects_mismatch():
    with pytest.raises(DataError):
        rmse([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        rmse([], [])


# --- experiment configuration ---------------------------------------------------

_CONFIG_TOML = """
[experiment]
seed = 7
folds = 4
workers = 2
target = "tip"

[graph.synthetic]
width = 5
height = 4
spacing_m = 150.0

[trips.synthetic]
n = 80
per_meter_rate = 0.002
noise_sd = 0.25
seed = 11
areas = [{x = 300.0, y = 150.0, radius_m = 200.0, bonus = 1.5}]

[balance]
bin_width = 0.5
lo = 0.0
hi = 3.0

[[representations]]
kind = "static"

[[representations]]
kind = "temporal_subpaths"
S = 3
N_S = 2

[[representations]]
kind = "three_steps_kn"
k = 2

[[models]]
kind = "forest"
n_trees = 5
max_depth = 4
seed = 1

[[models]]
kind = "mlp"
hidden_layers = 1
ndr = 4
dropout = 0.0
learning_rate = 0.01
epochs = 5
batch_size = 16
seed = 2

[baseline]
radii_m = [100.0, 500.0]
"""


def test_config_file_parses(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(_CONFIG_TOML)
    cfg = load_experiment_config(path)
    assert (cfg.seed, cfg.folds, cfg.workers, cfg.target) == (7, 4, 2, "tip")
    assert cfg.grid == (5, 4, 150.0)
    assert cfg.synthetic_n == 80
    assert cfg.synthetic.per_meter_rate == 0.002
    assert cfg.synthetic.noise_sd == 0.25
    assert cfg.synthetic.seed == 11
    assert len(cfg.synthetic.area_effects) == 1
    assert cfg.synthetic.area_effects[0].bonus == 1.5
    assert cfg.balance == (0.5, 0.0, 3.0)
    assert [r.kind for r in cfg.representations] == [
        "static", "temporal_subpaths", "three_steps_kn",
    ]
    assert (cfg.representations[1].S, cfg.representations[1].N_S) == (3, 2)
    assert cfg.representations[2].k == 2
    assert cfg.models[0] == ForestHyperparams(n_trees=5, max_depth=4, seed=1)
    assert isinstance(cfg.models[1], MlpHyperparams)
    assert cfg.area_radii == (100.0, 500.0)


def test_config_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(DataError):
        load_experiment_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment\nseed = ]")
    with pytest.raises(DataError):
        load_experiment_config(bad)


def test_config_rejects_incomplete_sections():
    with pytest.raises(DataError, match="nodes and edges"):
        experiment_config_from_dict({"graph": {"nodes": "n.csv"}})
    with pytest.raises(DataError, match="file"):
        experiment_config_from_dict({"trips": {"other": 1}})
    with pytest.raises(DataError, match="unknown model kind"):
        experiment_config_from_dict({"models": [{"kind": "svm"}]})
    with pytest.raises(DataError, match="forest"):
        experiment_config_from_dict({"models": [{"kind": "forest", "depth": 3}]})


# --- run_experiment --------------------------------------------------------------

def _fast_config() -> ExperimentConfig:
    cfg = ExperimentConfig(seed=3, folds=4, workers=1)
    cfg.grid = (5, 4, 150.0)
    cfg.synthetic = SyntheticTipModel(
        per_meter_rate=0.002, area_effects=(), noise_sd=0.2, seed=9
    )
    cfg.synthetic_n = 80
    cfg.area_radii = (200.0,)
    return cfg


@pytest.fixture(scope="module")
def small_report() -> EvalReport:
    cfg = _fast_config()
    cfg.representations = [ReprConfig("static")]
    cfg.models = [ForestHyperparams(n_trees=4, max_depth=4, seed=1)]
    return run_experiment(cfg)


def test_baselines_only_report():
    report = run_experiment(_fast_config())
    assert [(c.representation, c.model) for c in report.cells] == [
        ("-", "baseline_overall"),
        ("-", "baseline_area"),
    ]
    assert report.costs == ()


def test_mean_matches_folds(small_report):
    for cell in small_report.cells:
        assert cell.error is None
        assert len(cell.fold_rmses) == small_report.folds
        assert cell.mean_rmse == pytest.approx(
            sum(cell.fold_rmses) / len(cell.fold_rmses), abs=1e-12
        )


def test_identical_seeds_identical_reports(small_report):
    cfg = _fast_config()
    cfg.representations = [ReprConfig("static")]
    cfg.models = [ForestHyperparams(n_trees=4, max_depth=4, seed=1)]
    assert run_experiment(cfg) == small_report


def test_workers_do_not_change_results(small_report):
    cfg = _fast_config()
    cfg.workers = 3
    cfg.representations = [ReprConfig("static")]
    cfg.models = [ForestHyperparams(n_trees=4, max_depth=4, seed=1)]
    assert run_experiment(cfg) == small_report


def test_cost_profile_obeys_size_laws():
    cfg = _fast_config()
    cfg.representations = [
        ReprConfig("static"),
        ReprConfig("temporal_subpaths", S=3, N_S=2),
        ReprConfig("origin_destination"),
        ReprConfig("three_steps"),
        ReprConfig("k_neighbors", k=2),
        ReprConfig("three_steps_kn", k=2),
    ]
    report = run_experiment(cfg)
    n = 5 * 4
    by_label = {c.representation: c.n_features for c in report.costs}
    assert by_label[repr_label(cfg.representations[0])] == n
    assert by_label[repr_label(cfg.representations[1])] == 3 * n
    assert by_label[repr_label(cfg.representations[2])] == 2 * n
    assert by_label[repr_label(cfg.representations[3])] == 3 * n
    assert by_label[repr_label(cfg.representations[4])] == 2 * n
    assert by_label[repr_label(cfg.representations[5])] == 3 * n


def test_training_failure_is_per_cell():
    cfg = _fast_config()
    cfg.representations = [ReprConfig("static")]
    diverging = MlpHyperparams(
        hidden_layers=1, ndr=4, dropout=0.0, learning_rate=1e6, epochs=30,
        batch_size=16, seed=0,
    )
    cfg.models = [diverging, ForestHyperparams(n_trees=3, seed=1)]
    report = run_experiment(cfg)
    mlp_cell = next(c for c in report.cells if c.model == "mlp")
    forest_cell = next(c for c in report.cells if c.model == "forest")
    assert mlp_cell.error is not None and mlp_cell.mean_rmse is None
    assert forest_cell.error is None and forest_cell.mean_rmse is not None


def test_models_without_representations_rejected():
    cfg = _fast_config()
    cfg.models = [ForestHyperparams(n_trees=3)]
    with pytest.raises(DataError):
        run_experiment(cfg)


# --- report emission ---------------------------------------------------------------

def test_json_round_trip(small_report, tmp_path):
    path = tmp_path / "report.json"
    emit_report(small_report, path, fmt="json")
    assert parse_report(path) == small_report


def test_emitted_bytes_deterministic(small_report, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    emit_report(small_report, a, fmt="json")
    emit_report(small_report, b, fmt="json")
    assert a.read_bytes() == b.read_bytes()


def test_empty_cells_rejected():
    with pytest.raises(DataError):
        EvalReport(n_rows=10, folds=2, seed=0, cells=(), costs=())


def test_table_format(tmp_path):
    cells = (
        make_cell("-", "baseline_overall", [1.5, 2.5]),
        make_cell("static", "mlp", (), error="training diverged"),
    )
    report = EvalReport(n_rows=8, folds=2, seed=4, cells=cells, costs=())
    path = tmp_path / "report.txt"
    emit_report(report, path, fmt="table")
    text = path.read_text()
    assert "representation" in text and "mean_rmse" in text
    assert "2.0000" in text
    assert "FAILED" in text
    assert "rows=8 folds=2 seed=4" in text


def test_plotdata_format(small_report, tmp_path):
    path = tmp_path / "plot.csv"
    emit_report(small_report, path, fmt="plotdata")
    lines = path.read_text().splitlines()
    assert lines[0] == "representation,model,mean_rmse,std_rmse"
    assert len(lines) == 1 + len(small_report.cells)
    first = lines[1].split(",")
    assert first[0] == "-" and first[1] == "baseline_overall"
    assert float(first[2]) == small_report.cells[0].mean_rmse


def test_plotdata_skips_failed_cells(tmp_path):
    cells = (
        make_cell("-", "baseline_overall", [1.0, 1.0]),
        make_cell("static", "mlp", (), error="boom"),
    )
    report = EvalReport(n_rows=4, folds=2, seed=0, cells=cells, costs=())
    path = tmp_path / "plot.csv"
    emit_report(report, path, fmt="plotdata")
    assert len(path.read_text().splitlines()) == 2


def test_unwritable_destination(small_report, tmp_path):
    with pytest.raises(DataError):
        emit_report(small_report, tmp_path / "missing_dir" / "r.json", fmt="json")


def test_unknown_format_rejected(small_report, tmp_path):
    with pytest.raises(DataError):
        emit_report(small_report, tmp_path / "r.bin", fmt="binary")


def test_parse_rejects_foreign_files(tmp_path):
    not_json = tmp_path / "a.json"
    not_json.write_text("{{{")
    with pytest.raises(DataError):
        parse_report(not_json)
    wrong = tmp_path / "b.json"
    wrong.write_text(json.dumps({"format": "other", "version": 1}))
    with pytest.raises(DataError):
        parse_report(wrong)
