"""Trip ingestion: loading, snapping to routes, rebalancing, synthesis.

All data-level randomness (balancing, synthetic trips) runs through numpy's
default_rng (PCG64), a named portable generator: the same seed gives the
same dataset on every platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, NoRouteError
from .graph import (
    M_PER_DEG,
    Coordinate,
    Graph,
    Path,
    build_graph,
    coordinate_distance_m,
    nearest_node,
    shortest_path,
    shortest_path_length,
)


@dataclass(frozen=True)
class TripRecord:
    """One trip: endpoints plus the dollar amount being predicted."""

    pickup: Coordinate
    dropoff: Coordinate
    target: float

    def __post_init__(self):
        if not math.isfinite(self.target) or self.target < 0:
            raise DataError(f"trip target must be finite and >= 0, got {self.target!r}")


@dataclass(frozen=True)
class TripColumns:
    """Column names used when reading or writing delimited trip files."""

    pickup_lon: str = "pickup_longitude"
    pickup_lat: str = "pickup_latitude"
    dropoff_lon: str = "dropoff_longitude"
    dropoff_lat: str = "dropoff_latitude"
    target: str = "tip_amount"

    def all(self) -> tuple[str, ...]:
        return (self.pickup_lon, self.pickup_lat, self.dropoff_lon, self.dropoff_lat, self.target)


def trip_columns_for(target: str) -> TripColumns:
    """Column preset for a label choice: 'tip' or 'fare'."""
    if target == "tip":
        return TripColumns(target="tip_amount")
    if target == "fare":
        return TripColumns(target="fare_amount")
    raise DataError(f"unknown target {target!r}, expected 'tip' or 'fare'")


@dataclass
class PathDataset:
    """Routed trips: aligned paths, targets and their source records."""

    graph: Graph
    paths: list[Path]
    targets: np.ndarray
    trips: list[TripRecord]

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if not (len(self.paths) == len(self.targets) == len(self.trips)):
            raise DataError("paths, targets and trips must align")
        n = self.graph.n_nodes
        for p in self.paths:
            if int(p.nodes.max()) >= n:
                raise DataError("path indexes a node outside the graph")

    def __len__(self) -> int:
        return len(self.paths)

    def subset(self, indices: Sequence[int]) -> "PathDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return PathDataset(
            self.graph,
            [self.paths[i] for i in idx],
            self.targets[idx],
            [self.trips[i] for i in idx],
        )


def load_trips(path, columns: Optional[TripColumns] = None) -> tuple[list[TripRecord], int]:
    """Read a delimited trip file; returns (records, dropped-row count).

    Rows with unparseable or non-finite coordinates, or a missing, non-finite
    or negative target, are dropped.  Extra columns are ignored.
    """
    columns = columns or TripColumns()
    records: list[TripRecord] = []
    dropped = 0
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read trip file {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty trip file")
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in columns.all() if c not in header]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        for row in reader:
            row = {(k.strip() if k else k): v for k, v in row.items()}
            try:
                values = [float(row[c]) for c in columns.all()]
            except (TypeError, ValueError, KeyError):
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in values) or values[4] < 0:
                dropped += 1
                continue
            records.append(
                TripRecord(
                    Coordinate(values[0], values[1]),
                    Coordinate(values[2], values[3]),
                    values[4],
                )
            )
    if not records:
        raise DataError(f"{path}: no valid trip rows")
    return records, dropped


def save_trips(path, trips: Iterable[TripRecord], columns: Optional[TripColumns] = None) -> None:
    """Write trips in the same schema load_trips reads."""
    columns = columns or TripColumns()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns.all())
        for t in trips:
            # float() first: numpy scalars repr as "np.float64(...)".
            writer.writerow(
                [
                    repr(float(t.pickup.lon)),
                    repr(float(t.pickup.lat)),
                    repr(float(t.dropoff.lon)),
                    repr(float(t.dropoff.lat)),
                    repr(float(t.target)),
                ]
            )


_DATASET_MAGIC = "#pathrep-dataset v1"


def save_dataset(path, ds: PathDataset) -> None:
    """Write a routed dataset: one row per trip, endpoints, target, node ids."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_DATASET_MAGIC + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for trip, p, target in zip(ds.trips, ds.paths, ds.targets):
            # float() first: numpy scalars repr as "np.float64(...)".
            writer.writerow(
                [
                    repr(float(trip.pickup.lon)),
                    repr(float(trip.pickup.lat)),
                    repr(float(trip.dropoff.lon)),
                    repr(float(trip.dropoff.lat)),
                    repr(float(target)),
                    *(ds.graph.node_ids[i] for i in p.nodes),
                ]
            )


def load_dataset(path, g: Graph) -> PathDataset:
    """Read a dataset written by save_dataset, resolving node ids against g."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    with fh:
        first = fh.readline().strip()
        if first != _DATASET_MAGIC:
            raise DataError(f"{path}: not a dataset file")
        paths: list[Path] = []
        targets: list[float] = []
        trips: list[TripRecord] = []
        for lineno, row in enumerate(csv.reader(fh), start=2):
            if not row:
                continue
            if len(row) < 6:
                raise DataError(f"{path}:{lineno}: truncated dataset row")
            try:
                plon, plat, dlon, dlat, target = (float(v) for v in row[:5])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            try:
                nodes = [g.node_index[nid] for nid in row[5:]]
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: unknown node id {exc}") from None
            paths.append(Path(np.array(nodes, dtype=np.int32)))
            targets.append(target)
            trips.append(TripRecord(Coordinate(plon, plat), Coordinate(dlon, dlat), target))
    if not paths:
        raise DataError(f"{path}: empty dataset")
    return PathDataset(g, paths, np.array(targets, dtype=np.float64), trips)


def snap_and_route(
    g: Graph, trips: Sequence[TripRecord], workers: int = 1
) -> tuple[PathDataset, int]:
    """Snap endpoints to nodes and route each trip; returns (dataset, dropped).

    Trips whose endpoints snap to the same node, or with no route between
    them, are dropped.  Output order is input order regardless of workers.
    """
    if g.n_nodes == 0:
        raise DataError("cannot snap trips to an empty graph")

    def route_one(trip: TripRecord) -> Optional[Path]:
        o = nearest_node(g, trip.pickup)
        d = nearest_node(g, trip.dropoff)
        if o == d:
            return None
        try:
            return shortest_path(g, o, d)
        except NoRouteError:
            return None

    if workers > 1 and len(trips) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            routed = list(pool.map(route_one, trips))
    else:
        routed = [route_one(t) for t in trips]

    paths = []
    targets = []
    kept_trips = []
    for trip, p in zip(trips, routed):
        if p is None:
            continue
        paths.append(p)
        targets.append(trip.target)
        kept_trips.append(trip)
    dataset = PathDataset(g, paths, np.array(targets, dtype=np.float64), kept_trips)
    return dataset, len(trips) - len(dataset)


def balance_dataset(
    d: PathDataset, bin_width: float, lo: float, hi: float, seed: int = 0
) -> PathDataset:
    """Downsample every target bin to the smallest non-empty bin's size.

    Targets outside [lo, hi] are dropped first.  Bins are [lo+i*w, lo+(i+1)*w)
    with hi closing the last bin.  Sampling is uniform without replacement
    under the seed; surviving rows keep their original relative order.
    """
    if bin_width <= 0:
        raise DataError("bin_width must be > 0")
    if not lo < hi:
        raise DataError("need lo < hi")
    t = d.targets
    n_bins = max(1, math.ceil((hi - lo) / bin_width))
    bins: dict[int, list[int]] = {}
    for i, value in enumerate(t):
        if not lo <= value <= hi:
            continue
        b = min(int((value - lo) // bin_width), n_bins - 1)
        bins.setdefault(b, []).append(i)
    if not bins:
        raise DataError("no targets fall inside the balancing range")
    m = min(len(v) for v in bins.values())
    rng = np.random.default_rng(seed)
    kept: list[int] = []
    for b in sorted(bins):
        members = bins[b]
        if len(members) == m:
            kept.extend(members)
        else:
            pick = rng.choice(len(members), size=m, replace=False)
            kept.extend(members[i] for i in pick)
    kept.sort()
    return d.subset(kept)


def generate_grid_graph(width: int, height: int, spacing_m: float) -> Graph:
    """width x height planar lattice, 4-connected, uniform edge length."""
    if width < 1 or height < 1:
        raise DataError("grid dimensions must be >= 1")
    if spacing_m <= 0:
        raise DataError("spacing must be > 0")
    nodes = []
    edges = []
    for r in range(height):
        for c in range(width):
            nodes.append((f"g{r}-{c}", Coordinate(c * spacing_m, r * spacing_m)))
            if c + 1 < width:
                edges.append((f"g{r}-{c}", f"g{r}-{c+1}", None))
            if r + 1 < height:
                edges.append((f"g{r}-{c}", f"g{r+1}-{c}", None))
    return build_graph(nodes, edges, planar=True)


@dataclass(frozen=True)
class AreaEffect:
    """A disc that adds a flat bonus when a trip endpoint falls inside it."""

    center: Coordinate
    radius_m: float
    bonus: float

    def __post_init__(self):
        if self.radius_m <= 0:
            raise DataError("area radius must be > 0")


@dataclass(frozen=True)
class SyntheticTipModel:
    """Ground-truth generator for synthetic targets.

    target = per_meter_rate * route_length + sum of bonuses from areas
    containing either endpoint + N(0, noise_sd), clamped at 0.
    """

    per_meter_rate: float
    area_effects: tuple[AreaEffect, ...] = ()
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "area_effects", tuple(self.area_effects))
        if self.noise_sd < 0:
            raise DataError("noise_sd must be >= 0")


def generate_synthetic_trips(g: Graph, n: int, model: SyntheticTipModel) -> list[TripRecord]:
    """n random trips between distinct nodes with jittered endpoint coordinates.

    Deterministic for a fixed model.seed.  Unroutable node pairs are redrawn.
    """
    if n < 1:
        raise DataError("need n >= 1 trips")
    if g.n_nodes < 2:
        raise DataError("synthetic trips need a graph with >= 2 nodes")
    rng = np.random.default_rng(model.seed)
    jitter_m = 0.5 * float(np.median(g.lengths)) if len(g.lengths) else 0.0
    trips: list[TripRecord] = []
    attempts = 0
    while len(trips) < n:
        attempts += 1
        if attempts > 100 * n + 100:
            raise DataError("graph too disconnected to sample routable trips")
        o, d = (int(v) for v in rng.choice(g.n_nodes, size=2, replace=False))
        pickup = _jitter(g, o, jitter_m, rng)
        dropoff = _jitter(g, d, jitter_m, rng)
        noise = float(rng.normal(0.0, model.noise_sd)) if model.noise_sd > 0 else 0.0
        try:
            length = shortest_path_length(g, o, d)
        except NoRouteError:
            continue
        target = model.per_meter_rate * length
        for area in model.area_effects:
            if (
                coordinate_distance_m(area.center, pickup, g.planar) <= area.radius_m
                or coordinate_distance_m(area.center, dropoff, g.planar) <= area.radius_m
            ):
                target += area.bonus
        trips.append(TripRecord(pickup, dropoff, max(0.0, target + noise)))
    return trips


def _jitter(g: Graph, node: int, jitter_m: float, rng: np.random.Generator) -> Coordinate:
    # Offsets stay within half an edge length per axis so the point still
    # snaps to the node it was sampled from (on uniform grids).
    dx, dy = rng.uniform(-0.5, 0.5, size=2) * jitter_m
    lon = float(g.lon[node])
    lat = float(g.lat[node])
    if g.planar:
        return Coordinate(lon + dx, lat + dy)
    return Coordinate(
        lon + dx / (M_PER_DEG * math.cos(math.radians(lat))),
        lat + dy / M_PER_DEG,
    )
