"""Sparse binary input representations of graph paths.

Six encoders map a node sequence to a fixed-width 0/1 vector whose positions
are tied to graph node order: static occupancy (N slots), temporal sub-paths
(S*N), origin-destination (2N), three-steps (3N), k-hop neighborhoods of the
endpoints (2N), and three-steps over neighborhoods (3N).  Vectors are kept as
sorted index lists; dense arrays are materialized only at model boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import DataError
from .graph import Graph, Path, k_neighborhood_mask

if TYPE_CHECKING:
    from .ingest import PathDataset

KINDS = (
    "static",
    "temporal_subpaths",
    "origin_destination",
    "three_steps",
    "k_neighbors",
    "three_steps_kn",
)


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length binary vector stored as its sorted set positions."""

    length: int
    set_indices: np.ndarray  # int64, strictly increasing

    def __post_init__(self):
        idx = np.asarray(self.set_indices, dtype=np.int64)
        object.__setattr__(self, "set_indices", idx)
        if self.length <= 0:
            raise DataError("vector length must be positive")
        if len(idx) == 0:
            raise DataError("a feature vector needs at least one set bit")
        if idx[0] < 0 or idx[-1] >= self.length:
            raise DataError("set index out of range")
        if np.any(np.diff(idx) <= 0):
            raise DataError("set indices must be strictly increasing")

    @property
    def n_set(self) -> int:
        return len(self.set_indices)

    @property
    def density(self) -> float:
        return self.n_set / self.length

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.length, dtype=np.uint8)
        dense[self.set_indices] = 1
        return dense


@dataclass(frozen=True)
class ReprConfig:
    """Which representation to build, plus its shape parameters.

    S and N_S apply to temporal_subpaths only; k applies to the k-neighbor
    kinds.  Parameters may stay None when unknown (e.g. a matrix loaded from
    disk); encoding requires the relevant ones.
    """

    kind: str
    S: Optional[int] = None
    N_S: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown representation kind {self.kind!r}")
        if self.S is not None and self.S < 2:
            raise DataError("S must be >= 2")
        if self.N_S is not None and self.N_S < 1:
            raise DataError("N_S must be >= 1")
        if self.k is not None and self.k < 1:
            raise DataError("k must be >= 1")

    def require(self) -> "ReprConfig":
        """Check that the parameters this kind encodes with are present."""
        if self.kind == "temporal_subpaths" and (self.S is None or self.N_S is None):
            raise DataError("temporal_subpaths needs S and N_S")
        if self.kind in ("k_neighbors", "three_steps_kn") and self.k is None:
            raise DataError(f"{self.kind} needs k")
        return self


def n_features(cfg: ReprConfig, n_nodes: int) -> int:
    """Vector width for a representation on an N-node graph."""
    if cfg.kind == "static":
        return n_nodes
    if cfg.kind == "temporal_subpaths":
        cfg.require()
        return cfg.S * n_nodes
    if cfg.kind in ("origin_destination", "k_neighbors"):
        return 2 * n_nodes
    return 3 * n_nodes  # three_steps, three_steps_kn


def _check_path(g: Graph, p: Path) -> None:
    if int(p.nodes.max()) >= g.n_nodes or int(p.nodes.min()) < 0:
        raise IndexError("path node index out of range for this graph")


def encode_static(g: Graph, p: Path) -> FeatureVector:
    """Node-occupancy vector: position j is 1 iff node j appears in the path."""
    _check_path(g, p)
    return FeatureVector(g.n_nodes, np.unique(p.nodes).astype(np.int64))


def encode_temporal_subpaths(g: Graph, p: Path, S: int, N_S: int) -> FeatureVector:
    """Occupancy of up to S consecutive sub-paths of N_S nodes each.

    The path splits into runs of N_S nodes (the last run keeps the
    remainder).  More runs than S: the first ceil(S/2) and last floor(S/2)
    survive, middles drop.  Fewer: interior slots stay all-zero, so the
    destination-bearing run is always the second emitted block.  Emission
    order is first run, last run, then the interior runs in temporal order.
    """
    if S < 2:
        raise DataError("S must be >= 2")
    if N_S < 1:
        raise DataError("N_S must be >= 1")
    _check_path(g, p)
    nodes = p.nodes
    runs = [nodes[i:i + N_S] for i in range(0, len(nodes), N_S)]
    if len(runs) > S:
        head = (S + 1) // 2
        runs = runs[:head] + runs[len(runs) - (S - head):]
    empty = nodes[:0]
    slots = [empty] * S
    slots[0] = runs[0]
    if len(runs) >= 2:
        slots[S - 1] = runs[-1]
        slots[1:len(runs) - 1] = runs[1:-1]
    emit = [slots[0], slots[S - 1]] + slots[1:S - 1]
    n = g.n_nodes
    parts = [
        block * n + np.unique(run).astype(np.int64)
        for block, run in enumerate(emit)
        if len(run)
    ]
    return FeatureVector(S * n, np.concatenate(parts))


def encode_od(g: Graph, p: Path) -> FeatureVector:
    """Two blocks of N: origin bit in the first, destination bit in the second."""
    _check_path(g, p)
    return FeatureVector(
        2 * g.n_nodes, np.array([p.origin, g.n_nodes + p.destination], dtype=np.int64)
    )


def encode_three_steps(g: Graph, p: Path) -> FeatureVector:
    """encode_od followed by encode_static, concatenated."""
    od = encode_od(g, p)
    static = encode_static(g, p)
    return FeatureVector(
        3 * g.n_nodes, np.concatenate([od.set_indices, 2 * g.n_nodes + static.set_indices])
    )


def encode_k_neighbors(g: Graph, p: Path, k: int) -> FeatureVector:
    """k-hop neighborhood masks of the origin and of the destination."""
    if k < 1:
        raise DataError("k must be >= 1")
    _check_path(g, p)
    origin_mask = _cached_mask(g, p.origin, k)
    dest_mask = _cached_mask(g, p.destination, k)
    n = g.n_nodes
    return FeatureVector(
        2 * n,
        np.concatenate([np.flatnonzero(origin_mask), n + np.flatnonzero(dest_mask)]),
    )


def encode_three_steps_kn(g: Graph, p: Path, k: int) -> FeatureVector:
    """encode_k_neighbors followed by encode_static, concatenated."""
    kn = encode_k_neighbors(g, p, k)
    static = encode_static(g, p)
    return FeatureVector(
        3 * g.n_nodes, np.concatenate([kn.set_indices, 2 * g.n_nodes + static.set_indices])
    )


def encode_path(g: Graph, p: Path, cfg: ReprConfig) -> FeatureVector:
    """Dispatch a single path through the encoder cfg names."""
    cfg.require()
    if cfg.kind == "static":
        return encode_static(g, p)
    if cfg.kind == "temporal_subpaths":
        return encode_temporal_subpaths(g, p, cfg.S, cfg.N_S)
    if cfg.kind == "origin_destination":
        return encode_od(g, p)
    if cfg.kind == "three_steps":
        return encode_three_steps(g, p)
    if cfg.kind == "k_neighbors":
        return encode_k_neighbors(g, p, cfg.k)
    return encode_three_steps_kn(g, p, cfg.k)


@dataclass
class FeatureMatrix:
    """Encoded dataset: one FeatureVector and one target dollar amount per row."""

    n_features: int
    repr_config: ReprConfig
    vectors: list[FeatureVector] = field(default_factory=list)
    targets: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if len(self.vectors) != len(self.targets):
            raise DataError("one target per row required")
        for v in self.vectors:
            if v.length != self.n_features:
                raise DataError("all rows must share n_features")

    def __len__(self) -> int:
        return len(self.vectors)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((len(self.vectors), self.n_features), dtype=np.uint8)
        for i, v in enumerate(self.vectors):
            dense[i, v.set_indices] = 1
        return dense

    def subset(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(
            self.n_features,
            self.repr_config,
            [self.vectors[i] for i in idx],
            self.targets[idx],
        )


def encode_dataset(g: Graph, dataset: "PathDataset", cfg: ReprConfig, workers: int = 1) -> FeatureMatrix:
    """Encode every path in the dataset; row order matches dataset order.

    The k-neighbor kinds precompute one BFS mask per distinct endpoint, in
    parallel when workers > 1; results do not depend on workers.
    """
    cfg.require()
    paths = dataset.paths
    if cfg.kind in ("k_neighbors", "three_steps_kn"):
        _warm_neighborhood_cache(g, paths, cfg.k, workers)
    vectors = [encode_path(g, p, cfg) for p in paths]
    return FeatureMatrix(
        n_features(cfg, g.n_nodes),
        cfg,
        vectors,
        np.asarray(dataset.targets, dtype=np.float64),
    )


def _warm_neighborhood_cache(g: Graph, paths, k: int, workers: int) -> None:
    # BFS masks per (node, k) are cached on the graph so repeated endpoints
    # (common after snapping) cost one traversal.
    cache = _mask_cache(g)
    endpoints = {p.origin for p in paths} | {p.destination for p in paths}
    todo = sorted(node for node in endpoints if (node, k) not in cache)
    if workers > 1 and len(todo) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            masks = list(pool.map(lambda nd: k_neighborhood_mask(g, nd, k), todo))
    else:
        masks = [k_neighborhood_mask(g, node, k) for node in todo]
    for node, mask in zip(todo, masks):
        cache[(node, k)] = mask


def _mask_cache(g: Graph) -> dict:
    cache = getattr(g, "_neighborhood_masks", None)
    if cache is None:
        cache = {}
        g._neighborhood_masks = cache
    return cache


def _cached_mask(g: Graph, node: int, k: int) -> np.ndarray:
    cache = getattr(g, "_neighborhood_masks", None)
    if cache is not None:
        mask = cache.get((node, k))
        if mask is not None:
            return mask
    return k_neighborhood_mask(g, node, k)


@dataclass(frozen=True)
class CostReport:
    """Desk-scale footprint of a representation on a dataset."""

    kind: str
    n_features: int
    n_rows: int
    mean_nonzeros: float
    max_nonzeros: int
    total_set_bits: int

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "n_rows": self.n_rows,
            "mean_nonzeros": self.mean_nonzeros,
            "max_nonzeros": self.max_nonzeros,
            "total_set_bits": self.total_set_bits,
        }


def matrix_cost(m: FeatureMatrix) -> CostReport:
    counts = [v.n_set for v in m.vectors]
    total = int(sum(counts))
    return CostReport(
        kind=m.repr_config.kind,
        n_features=m.n_features,
        n_rows=len(m.vectors),
        mean_nonzeros=total / len(counts) if counts else 0.0,
        max_nonzeros=max(counts) if counts else 0,
        total_set_bits=total,
    )


def repr_cost(cfg: ReprConfig, g: Graph, dataset: "PathDataset") -> CostReport:
    """Cost profile of cfg on a dataset: width, nonzeros per row, total bits."""
    return matrix_cost(encode_dataset(g, dataset, cfg))


def save_matrix(path, m: FeatureMatrix) -> None:
    """Write `target idx:1 ...` rows under a `#n_features= repr=` header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#n_features={m.n_features} repr={m.repr_config.kind}\n")
        for vec, tgt in zip(m.vectors, m.targets):
            cells = " ".join(f"{i}:1" for i in vec.set_indices)
            fh.write(f"{float(tgt)!r} {cells}\n")


def load_matrix(path) -> FeatureMatrix:
    """Inverse of save_matrix; shape parameters beyond the kind are not stored."""
    vectors = []
    targets = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if header is None:
                    header = _parse_header(path, line)
                continue
            if header is None:
                raise DataError(f"{path}: missing #n_features header")
            parts = line.split()
            try:
                targets.append(float(parts[0]))
                idx = np.array([int(c.split(":")[0]) for c in parts[1:]], dtype=np.int64)
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed row") from None
            vectors.append(FeatureVector(header[0], idx))
    if header is None:
        raise DataError(f"{path}: missing #n_features header")
    return FeatureMatrix(header[0], ReprConfig(header[1]), vectors, np.array(targets))


def _parse_header(path, line: str) -> tuple[int, str]:
    try:
        fields = dict(part.split("=", 1) for part in line.lstrip("#").split())
        return int(fields["n_features"]), fields["repr"]
    except (ValueError, KeyError):
        raise DataError(f"{path}: bad header {line!r}") from None
