"""Road-network graph: construction, routing, neighborhoods, snapping.

The graph is immutable after construction; all queries are read-only and
safe to call from multiple workers.  Node order at construction time defines
the vector-position contract used by every encoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import DataError, NoRouteError

EARTH_RADIUS_M = 6_371_000.0
M_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0

# Guard limits beyond which the bucket-grid distance bound is unsafe and
# nearest_node falls back to a linear scan.
_GRID_MAX_ABS_LAT = 80.0
_GRID_MAX_LON_SPAN = 10.0


class Coordinate(NamedTuple):
    """A point: lon/lat in degrees, or x/y in meters for planar graphs."""

    lon: float
    lat: float


@dataclass(frozen=True)
class Path:
    """An ordered node-index sequence; origin first, destination last.

    Consecutive nodes are not required to be adjacent in the graph: encoders
    accept any node sequence.
    """

    nodes: np.ndarray  # int32

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=np.int32))
        if len(self.nodes) < 1:
            raise DataError("a path needs at least one node")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def origin(self) -> int:
        return int(self.nodes[0])

    @property
    def destination(self) -> int:
        return int(self.nodes[-1])


class Graph:
    """Undirected weighted road network in CSR form.

    Built through :func:`build_graph`; do not mutate after construction.
    ``planar=True`` means coordinates are x/y meters (synthetic graphs)
    instead of lon/lat degrees.
    """

    def __init__(self, node_ids, lon, lat, indptr, indices, lengths, planar):
        self.node_ids: list[str] = node_ids
        self.lon = lon
        self.lat = lat
        self.indptr = indptr
        self.indices = indices
        self.lengths = lengths
        self.planar = planar
        self.node_index = {nid: i for i, nid in enumerate(node_ids)}
        self._grid = _BucketGrid.build(self)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        """Number of undirected edges (directed CSR entries / 2)."""
        return len(self.indices) // 2

    def neighbors(self, i: int) -> list[int]:
        return self.indices[self.indptr[i]:self.indptr[i + 1]].tolist()

    def coordinate(self, i: int) -> Coordinate:
        return Coordinate(float(self.lon[i]), float(self.lat[i]))

    def distances_to(self, c: Coordinate, node_idx: np.ndarray) -> np.ndarray:
        """Distance in meters from c to each node in node_idx."""
        return distances_m(c, self.lon[node_idx], self.lat[node_idx], self.planar)


def _haversine_m_arr(lon1, lat1, lon2, lat2):
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(lon2 - lon1)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def coordinate_distance_m(a: Coordinate, b: Coordinate, planar: bool) -> float:
    """Great-circle distance for geographic coordinates, Euclidean for planar."""
    if planar:
        return math.hypot(a.lon - b.lon, a.lat - b.lat)
    return float(_haversine_m_arr(a.lon, a.lat, np.float64(b.lon), np.float64(b.lat)))


def distances_m(c: Coordinate, lon: np.ndarray, lat: np.ndarray, planar: bool) -> np.ndarray:
    """Distance in meters from c to each (lon[i], lat[i]) point."""
    if planar:
        return np.hypot(lon - c.lon, lat - c.lat)
    return _haversine_m_arr(c.lon, c.lat, lon, lat)


def build_graph(
    nodes: Sequence[tuple[str, Coordinate]],
    edges: Iterable[tuple[str, str, Optional[float]]],
    planar: bool = False,
) -> Graph:
    """Build an undirected graph from (id, coordinate) nodes and id-pair edges.

    Edges may carry an explicit length in meters; missing lengths are
    computed from the endpoint coordinates.  Raises DataError on duplicate
    node ids, unknown endpoints or non-positive explicit lengths.
    """
    node_ids = []
    lons = []
    lats = []
    index: dict[str, int] = {}
    for nid, coord in nodes:
        nid = str(nid)
        if nid in index:
            raise DataError(f"duplicate node id: {nid!r}")
        index[nid] = len(node_ids)
        node_ids.append(nid)
        c = Coordinate(float(coord[0]), float(coord[1]))
        if not planar and not (-180.0 <= c.lon <= 180.0 and -90.0 <= c.lat <= 90.0):
            raise DataError(f"node {nid!r}: coordinate out of range: {c}")
        lons.append(c.lon)
        lats.append(c.lat)
    lon = np.array(lons, dtype=np.float64)
    lat = np.array(lats, dtype=np.float64)

    n = len(node_ids)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for edge in edges:
        ida, idb = edge[0], edge[1]
        explicit = edge[2] if len(edge) > 2 else None
        try:
            a = index[str(ida)]
            b = index[str(idb)]
        except KeyError as exc:
            raise DataError(f"edge endpoint not in node list: {exc.args[0]!r}") from None
        if explicit is not None:
            length = float(explicit)
            if not math.isfinite(length) or length <= 0.0:
                raise DataError(f"edge {ida!r}-{idb!r}: non-positive length {explicit!r}")
        else:
            length = coordinate_distance_m(
                Coordinate(lon[a], lat[a]), Coordinate(lon[b], lat[b]), planar
            )
        adj[a].append((b, length))
        if b != a:
            adj[b].append((a, length))

    indptr = np.zeros(n + 1, dtype=np.int32)
    indices = np.empty(sum(len(lst) for lst in adj), dtype=np.int32)
    lengths = np.empty(len(indices), dtype=np.float64)
    pos = 0
    for u in range(n):
        for v, w in sorted(adj[u]):
            indices[pos] = v
            lengths[pos] = w
            pos += 1
        indptr[u + 1] = pos

    return Graph(node_ids, lon, lat, indptr, indices, lengths, planar)


def k_neighborhood(g: Graph, base: int, k: int) -> set[int]:
    """All nodes within k unweighted hops of base, including base itself."""
    mask = k_neighborhood_mask(g, base, k)
    return set(np.flatnonzero(mask).tolist())


def k_neighborhood_mask(g: Graph, base: int, k: int) -> np.ndarray:
    """Membership mask (uint8, length N) of the k-hop neighborhood."""
    if not 0 <= base < g.n_nodes:
        raise IndexError(f"base node {base} out of range [0, {g.n_nodes})")
    if k < 0:
        raise ValueError("hop count must be >= 0")
    return kernels.bfs_mask(g.indptr, g.indices, int(base), int(k))


def shortest_path(g: Graph, origin: int, dest: int) -> Path:
    """Minimum-length path between two node indices (Dijkstra).

    Equal-length alternatives resolve deterministically by preferring lower
    predecessor indices.  Raises NoRouteError when dest is unreachable.
    """
    path, _ = _route(g, origin, dest)
    return path


def shortest_path_length(g: Graph, origin: int, dest: int) -> float:
    """Length in meters of the shortest path; NoRouteError if unreachable."""
    _, length = _route(g, origin, dest)
    return length


def _route(g: Graph, origin: int, dest: int) -> tuple[Path, float]:
    n = g.n_nodes
    if not 0 <= origin < n:
        raise IndexError(f"origin {origin} out of range [0, {n})")
    if not 0 <= dest < n:
        raise IndexError(f"dest {dest} out of range [0, {n})")
    if origin == dest:
        return Path(np.array([origin], dtype=np.int32)), 0.0
    dist, pred = kernels.dijkstra(g.indptr, g.indices, g.lengths, int(origin), int(dest))
    total = float(dist[dest])
    if math.isinf(total):
        raise NoRouteError(f"no route from node {origin} to node {dest}")
    chain = [dest]
    u = dest
    while u != origin:
        u = int(pred[u])
        chain.append(u)
    chain.reverse()
    return Path(np.array(chain, dtype=np.int32)), total


class _BucketGrid:
    """Uniform spatial buckets over a planar projection of the nodes.

    Bucket size is the median edge length.  Geographic graphs use an
    equirectangular projection; the ring-termination bound stays valid by
    scaling with a conservative factor (see ``_safety``).  Returns None from
    build() when the geometry makes that bound unsafe (huge lon spans,
    near-polar nodes) so nearest_node falls back to the linear scan.
    """

    def __init__(self, g, bucket_m, x, y, buckets):
        self.bucket_m = bucket_m
        self.x = x
        self.y = y
        self.buckets = buckets
        keys = np.array(list(buckets), dtype=np.int64)
        self.key_lo = keys.min(axis=0)
        self.key_hi = keys.max(axis=0)
        self.max_abs_lat = float(np.max(np.abs(g.lat))) if g.n_nodes else 0.0
        self.lat0_rad = math.radians(float(np.mean(g.lat))) if g.n_nodes else 0.0

    @staticmethod
    def build(g: Graph) -> Optional["_BucketGrid"]:
        if g.n_nodes == 0 or len(g.lengths) == 0:
            return None
        bucket_m = float(np.median(g.lengths))
        if not math.isfinite(bucket_m) or bucket_m <= 0.0:
            return None
        if g.planar:
            x = g.lon
            y = g.lat
        else:
            if float(np.max(np.abs(g.lat))) > _GRID_MAX_ABS_LAT:
                return None
            if float(np.max(g.lon) - np.min(g.lon)) > _GRID_MAX_LON_SPAN:
                return None
            lat0 = math.radians(float(np.mean(g.lat)))
            x = g.lon * (M_PER_DEG * math.cos(lat0))
            y = g.lat * M_PER_DEG
        ix = np.floor(x / bucket_m).astype(np.int64)
        iy = np.floor(y / bucket_m).astype(np.int64)
        buckets: dict[tuple[int, int], list[int]] = {}
        for i in range(g.n_nodes):
            buckets.setdefault((int(ix[i]), int(iy[i])), []).append(i)
        packed = {key: np.array(val, dtype=np.int64) for key, val in buckets.items()}
        grid = _BucketGrid(g, bucket_m, x, y, packed)
        return grid

    def _project(self, c: Coordinate, planar: bool) -> tuple[float, float]:
        if planar:
            return c.lon, c.lat
        return c.lon * (M_PER_DEG * math.cos(self.lat0_rad)), c.lat * M_PER_DEG

    def _safety(self, c: Coordinate, planar: bool) -> float:
        if planar:
            return 1.0
        # True distance >= projected lon separation scaled by
        # cos(max |lat|) / cos(lat0) * 2/pi; lat separation is never
        # shrunk by the projection.  2/pi covers sin(x) <= x curvature.
        max_lat = max(self.max_abs_lat, abs(c.lat))
        if max_lat > _GRID_MAX_ABS_LAT:
            return 0.0
        return math.cos(math.radians(max_lat)) / math.cos(self.lat0_rad) * (2.0 / math.pi)

    def query(self, g: Graph, c: Coordinate) -> Optional[int]:
        safety = self._safety(c, g.planar)
        if safety <= 0.0:
            return None
        qx, qy = self._project(c, g.planar)
        bx = math.floor(qx / self.bucket_m)
        by = math.floor(qy / self.bucket_m)
        best_d = math.inf
        best_i = -1
        # Rings closer than the bbox hold no nodes; rings past max_r add none.
        r = max(
            0,
            int(self.key_lo[0]) - bx,
            bx - int(self.key_hi[0]),
            int(self.key_lo[1]) - by,
            by - int(self.key_hi[1]),
        )
        max_r = self._max_ring(bx, by)
        while r <= max_r:
            if best_i >= 0 and (r - 1) * self.bucket_m * safety > best_d:
                break
            for key in self._ring_keys(bx, by, r):
                idx = self.buckets.get(key)
                if idx is None:
                    continue
                d = g.distances_to(c, idx)
                for j in range(len(idx)):
                    dj = float(d[j])
                    i = int(idx[j])
                    if dj < best_d or (dj == best_d and i < best_i):
                        best_d = dj
                        best_i = i
            r += 1
        return best_i if best_i >= 0 else None

    def _max_ring(self, bx: int, by: int) -> int:
        return int(
            max(
                abs(self.key_lo[0] - bx),
                abs(self.key_hi[0] - bx),
                abs(self.key_lo[1] - by),
                abs(self.key_hi[1] - by),
            )
        )

    def _ring_keys(self, bx: int, by: int, r: int):
        """Cells at Chebyshev distance r, clipped to the occupied bbox."""
        lo_x, lo_y = int(self.key_lo[0]), int(self.key_lo[1])
        hi_x, hi_y = int(self.key_hi[0]), int(self.key_hi[1])
        if r == 0:
            if lo_x <= bx <= hi_x and lo_y <= by <= hi_y:
                yield (bx, by)
            return
        x0 = max(bx - r, lo_x)
        x1 = min(bx + r, hi_x)
        if lo_y <= by - r <= hi_y:
            for x in range(x0, x1 + 1):
                yield (x, by - r)
        if lo_y <= by + r <= hi_y:
            for x in range(x0, x1 + 1):
                yield (x, by + r)
        y0 = max(by - r + 1, lo_y)
        y1 = min(by + r - 1, hi_y)
        if lo_x <= bx - r <= hi_x:
            for y in range(y0, y1 + 1):
                yield (bx - r, y)
        if lo_x <= bx + r <= hi_x:
            for y in range(y0, y1 + 1):
                yield (bx + r, y)


def nearest_node(g: Graph, c: Coordinate) -> int:
    """Index of the node closest to c; ties break to the lower index.

    Uses the bucket grid when available, otherwise a full scan; both give
    identical answers.
    """
    if g.n_nodes == 0:
        raise DataError("nearest_node on an empty graph")
    c = Coordinate(float(c[0]), float(c[1]))
    if g._grid is not None:
        hit = g._grid.query(g, c)
        if hit is not None:
            return hit
    return _nearest_node_scan(g, c)


def _nearest_node_scan(g: Graph, c: Coordinate) -> int:
    d = g.distances_to(c, np.arange(g.n_nodes))
    return int(np.flatnonzero(d == d.min())[0])


# ---------------------------------------------------------------------------
# Node / edge file formats: `id,lon,lat` and `id_from,id_to[,length_m]`,
# one record per line, `#` starts a comment.  A `# coords=planar` comment in
# the node file marks planar (x/y meters) coordinates.

def load_node_file(path) -> tuple[list[tuple[str, Coordinate]], bool]:
    nodes = []
    planar = False
    for lineno, line in enumerate(_data_lines(path), start=1):
        if line.startswith("#"):
            if "coords=planar" in line:
                planar = True
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected `id,lon,lat`, got {line!r}")
        try:
            nodes.append((parts[0].strip(), Coordinate(float(parts[1]), float(parts[2]))))
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad coordinate in {line!r}") from None
    return nodes, planar


def load_edge_file(path) -> list[tuple[str, str, Optional[float]]]:
    edges = []
    for lineno, line in enumerate(_data_lines(path), start=1):
        if line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) not in (2, 3):
            raise DataError(f"{path}:{lineno}: expected `id_from,id_to[,length_m]`")
        length = None
        if len(parts) == 3 and parts[2].strip():
            try:
                length = float(parts[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad length in {line!r}") from None
        edges.append((parts[0].strip(), parts[1].strip(), length))
    return edges


def load_graph(nodes_path, edges_path) -> Graph:
    nodes, planar = load_node_file(nodes_path)
    if not nodes:
        raise DataError(f"{nodes_path}: no nodes")
    return build_graph(nodes, load_edge_file(edges_path), planar=planar)


def save_node_file(path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if g.planar:
            fh.write("# coords=planar\n")
        for i, nid in enumerate(g.node_ids):
            fh.write(f"{nid},{float(g.lon[i])!r},{float(g.lat[i])!r}\n")


def save_edge_file(path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u in range(g.n_nodes):
            for e in range(g.indptr[u], g.indptr[u + 1]):
                v = int(g.indices[e])
                if v >= u:
                    fh.write(f"{g.node_ids[u]},{g.node_ids[v]},{float(g.lengths[e])!r}\n")


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line:
                yield line
