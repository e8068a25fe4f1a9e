"""Coordinate-only baselines: overall mean and proximity-area mean.

These predict from raw trip endpoints, not encoded features, and anchor the
bottom of every comparison table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError
from ..graph import Coordinate, distances_m
from ..ingest import TripRecord

# The tuning sweep covers 100 m to 5 km.
DEFAULT_AREA_RADII_M = (100.0, 250.0, 500.0, 1000.0, 2000.0, 3500.0, 5000.0)


@dataclass(frozen=True)
class BaselineModel:
    """Either the overall-mean predictor or the area-mean predictor."""

    kind: str  # "overall" or "area"
    overall_mean: float
    radius_m: Optional[float] = None
    pickup_lon: Optional[np.ndarray] = None
    pickup_lat: Optional[np.ndarray] = None
    dropoff_lon: Optional[np.ndarray] = None
    dropoff_lat: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None
    planar: bool = False


def train_baseline_overall(targets) -> BaselineModel:
    """Predict the arithmetic mean of the training targets, always."""
    t = np.asarray(targets, dtype=np.float64)
    if len(t) == 0:
        raise DataError("overall baseline needs at least one target")
    # Sequential summation keeps the stored mean independent of numpy's
    # pairwise-sum blocking, so it is reproducible against a plain loop.
    mean = math.fsum(t.tolist()) / len(t)
    return BaselineModel(kind="overall", overall_mean=mean)


def train_baseline_area(
    trips: Sequence[TripRecord], radius_m: float, planar: bool
) -> BaselineModel:
    """Remember the training trips; predict the mean over nearby ones."""
    if not trips:
        raise DataError("area baseline needs at least one trip")
    if radius_m <= 0:
        raise DataError("area radius must be > 0")
    targets = np.array([t.target for t in trips], dtype=np.float64)
    return BaselineModel(
        kind="area",
        overall_mean=math.fsum(targets.tolist()) / len(targets),
        radius_m=float(radius_m),
        pickup_lon=np.array([t.pickup.lon for t in trips]),
        pickup_lat=np.array([t.pickup.lat for t in trips]),
        dropoff_lon=np.array([t.dropoff.lon for t in trips]),
        dropoff_lat=np.array([t.dropoff.lat for t in trips]),
        targets=targets,
        planar=planar,
    )


def predict_baseline(m: BaselineModel, trips: Sequence[TripRecord]) -> np.ndarray:
    """One prediction per query trip."""
    if m.kind == "overall":
        return np.full(len(trips), m.overall_mean, dtype=np.float64)
    if m.kind != "area":
        raise DataError(f"unknown baseline kind {m.kind!r}")
    out = np.empty(len(trips), dtype=np.float64)
    for i, trip in enumerate(trips):
        near_pickup = (
            distances_m(trip.pickup, m.pickup_lon, m.pickup_lat, m.planar) <= m.radius_m
        )
        near_dropoff = (
            distances_m(trip.dropoff, m.dropoff_lon, m.dropoff_lat, m.planar) <= m.radius_m
        )
        match = near_pickup & near_dropoff
        if match.any():
            out[i] = math.fsum(m.targets[match].tolist()) / int(match.sum())
        else:
            out[i] = m.overall_mean
    return out


def tune_area_radius(
    train_trips: Sequence[TripRecord],
    val_trips: Sequence[TripRecord],
    planar: bool,
    radii_m: Sequence[float] = DEFAULT_AREA_RADII_M,
) -> float:
    """Radius with the lowest validation RMSE; ties go to the smaller radius."""
    if len(radii_m) == 0:
        raise DataError("no candidate radii")
    val_targets = np.array([t.target for t in val_trips], dtype=np.float64)
    best_r = None
    best_rmse = math.inf
    for r in sorted(float(r) for r in radii_m):
        model = train_baseline_area(train_trips, r, planar)
        err = predict_baseline(model, val_trips) - val_targets
        rmse = math.sqrt(float(np.mean(err * err)))
        if rmse < best_rmse:
            best_rmse = rmse
            best_r = r
    return best_r
