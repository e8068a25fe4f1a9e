"""Shared fixtures: small hand-checkable graphs used across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from pathrep.graph import Coordinate, Graph, build_graph


@pytest.fixture
def five_node_graph() -> Graph:
    """The worked 5-node example: v2 hub connected to v1, v3, v4; v5 leaf on v4.

    Node order v1..v5 maps to vector positions 0..4.
    """
    nodes = [
        ("v1", Coordinate(-74.000, 40.700)),
        ("v2", Coordinate(-74.000, 40.710)),
        ("v3", Coordinate(-73.990, 40.710)),
        ("v4", Coordinate(-74.010, 40.710)),
        ("v5", Coordinate(-74.010, 40.720)),
    ]
    edges = [("v2", "v1", None), ("v2", "v3", None), ("v2", "v4", None), ("v5", "v4", None)]
    return build_graph(nodes, edges)


@pytest.fixture
def square_graph() -> Graph:
    """4-node planar square, 100 m spacing, edges along the sides."""
    nodes = [
        ("a", Coordinate(0.0, 0.0)),
        ("b", Coordinate(100.0, 0.0)),
        ("c", Coordinate(100.0, 100.0)),
        ("d", Coordinate(0.0, 100.0)),
    ]
    edges = [("a", "b", None), ("b", "c", None), ("c", "d", None), ("d", "a", None)]
    return build_graph(nodes, edges, planar=True)


def random_geometric_graph(
    rng: np.random.Generator, n: int, radius: float, planar: bool = True
) -> Graph:
    """n nodes uniform in a 1000 m box, edges between pairs closer than radius."""
    xs = rng.uniform(0.0, 1000.0, size=n)
    ys = rng.uniform(0.0, 1000.0, size=n)
    nodes = [(f"n{i}", Coordinate(float(xs[i]), float(ys[i]))) for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(xs[i] - xs[j], ys[i] - ys[j]) <= radius:
                edges.append((f"n{i}", f"n{j}", None))
    return build_graph(nodes, edges, planar=planar)
