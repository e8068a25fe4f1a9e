"""Overall-mean and area-mean baselines."""

from __future__ import annotations

import numpy as np
import pytest

from pathrep.errors import DataError
from pathrep.graph import Coordinate
from pathrep.ingest import TripRecord
from pathrep.models import (
    predict_baseline,
    train_baseline_area,
    train_baseline_overall,
    tune_area_radius,
)


def _trip(px, py, dx, dy, target):
    return TripRecord(Coordinate(px, py), Coordinate(dx, dy), target)


def test_overall_mean_small_cases():
    assert train_baseline_overall([2.0, 4.0]).overall_mean == 3.0
    assert train_baseline_overall([5.0]).overall_mean == 5.0


def test_overall_mean_against_summation_oracle():
    rng = np.random.default_rng(71)
    targets = rng.uniform(0, 25, size=1000)
    m = train_baseline_overall(targets)
    acc = 0.0
    for t in targets.tolist():
        acc += t
    assert m.overall_mean == pytest.approx(acc / 1000, abs=1e-9)


def test_overall_empty_rejected():
    with pytest.raises(DataError):
        train_baseline_overall([])


def test_overall_predicts_constant():
    m = train_baseline_overall([1.0, 3.0])
    queries = [_trip(0, 0, 1, 1, 0.0), _trip(9, 9, 2, 2, 0.0)]
    assert predict_baseline(m, queries).tolist() == [2.0, 2.0]


def test_area_huge_radius_equals_overall_exactly():
    rng = np.random.default_rng(73)
    trips = [
        _trip(
            float(rng.uniform(0, 1000)),
            float(rng.uniform(0, 1000)),
            float(rng.uniform(0, 1000)),
            float(rng.uniform(0, 1000)),
            float(rng.uniform(0, 10)),
        )
        for _ in range(120)
    ]
    area = train_baseline_area(trips, radius_m=1e7, planar=True)
    overall = train_baseline_overall([t.target for t in trips])
    queries = trips[:30]
    assert predict_baseline(area, queries).tolist() == [overall.overall_mean] * 30


def test_area_exact_match_tiny_radius():
    trips = [_trip(100.0, 100.0, 900.0, 900.0, 7.5), _trip(500.0, 500.0, 0.0, 0.0, 1.0)]
    m = train_baseline_area(trips, radius_m=1.0, planar=True)
    assert predict_baseline(m, [trips[0]])[0] == 7.5


def test_area_empty_match_falls_back_to_overall():
    trips = [_trip(0.0, 0.0, 10.0, 0.0, 4.0), _trip(0.0, 0.0, 10.0, 0.0, 6.0)]
    m = train_baseline_area(trips, radius_m=1.0, planar=True)
    far_query = _trip(5000.0, 5000.0, 6000.0, 6000.0, 0.0)
    assert predict_baseline(m, [far_query])[0] == 5.0


def test_area_requires_both_endpoints_near():
    # Query pickup matches trip A's pickup, but its dropoff is nowhere near
    # A's dropoff, so A must not contribute.
    trips = [
        _trip(0.0, 0.0, 1000.0, 0.0, 9.0),
        _trip(0.0, 0.0, 2000.0, 0.0, 1.0),
    ]
    m = train_baseline_area(trips, radius_m=50.0, planar=True)
    query = _trip(0.0, 0.0, 2000.0, 0.0, 0.0)
    assert predict_baseline(m, [query])[0] == 1.0


def _two_cluster_trips():
    # Cluster A around (0,0)->(10_000,0) with target 2.0, cluster B around
    # (0,5000)->(10_000,5000) with target 8.0; clusters 5 km apart.
    rng = np.random.default_rng(79)
    trips = []
    for _ in range(40):
        jx, jy = rng.uniform(-200, 200, size=2)
        trips.append(_trip(jx, jy, 10_000.0 + jx, jy, 2.0))
    for _ in range(40):
        jx, jy = rng.uniform(-200, 200, size=2)
        trips.append(_trip(jx, 5000.0 + jy, 10_000.0 + jx, 5000.0 + jy, 8.0))
    return trips


def test_area_two_clusters():
    trips = _two_cluster_trips()
    m = train_baseline_area(trips, radius_m=2500.0, planar=True)
    in_a = _trip(0.0, 0.0, 10_000.0, 0.0, 0.0)
    in_b = _trip(0.0, 5000.0, 10_000.0, 5000.0, 0.0)
    preds = predict_baseline(m, [in_a, in_b])
    assert preds[0] == pytest.approx(2.0, abs=0.01)
    assert preds[1] == pytest.approx(8.0, abs=0.01)


def test_area_geographic_distance_mode():
    # 0.001 deg lat ~ 111 m: radius 200 m joins; radius 50 m separates.
    trips = [
        _trip(0.0, 0.0, 0.5, 0.5, 3.0),
        _trip(0.0, 0.001, 0.5, 0.501, 5.0),
    ]
    joined = train_baseline_area(trips, radius_m=200.0, planar=False)
    assert predict_baseline(joined, [trips[0]])[0] == 4.0
    split = train_baseline_area(trips, radius_m=50.0, planar=False)
    assert predict_baseline(split, [trips[0]])[0] == 3.0


def test_area_validation():
    with pytest.raises(DataError):
        train_baseline_area([], 100.0, planar=True)
    with pytest.raises(DataError):
        train_baseline_area([_trip(0, 0, 1, 1, 1.0)], 0.0, planar=True)


def test_tune_single_candidate():
    trips = _two_cluster_trips()
    assert tune_area_radius(trips, trips[:10], planar=True, radii_m=[123.0]) == 123.0


def test_tune_selects_separating_radius():
    trips = _two_cluster_trips()
    train, val = trips[::2], trips[1::2]
    r = tune_area_radius(train, val, planar=True, radii_m=[100.0, 500.0, 5000.0])
    assert r == 500.0


def test_tune_result_in_candidate_set():
    trips = _two_cluster_trips()
    candidates = [150.0, 900.0, 2700.0, 4000.0]
    r = tune_area_radius(trips[::2], trips[1::2], planar=True, radii_m=candidates)
    assert r in candidates


def test_tune_empty_candidates_rejected():
    trips = _two_cluster_trips()
    with pytest.raises(DataError):
        tune_area_radius(trips, trips, planar=True, radii_m=[])


def test_tune_tie_prefers_smaller_radius():
    # One training trip, one identical validation trip: every radius that
    # matches gives the same RMSE, so the smallest candidate must win.
    trips = [_trip(0.0, 0.0, 100.0, 0.0, 5.0)]
    r = tune_area_radius(trips, trips, planar=True, radii_m=[300.0, 200.0, 400.0])
    assert r == 200.0
