"""Random decision forest regressor over binary feature rows.

Trees are CART regression trees on bootstrap samples with per-split feature
subsampling; the hot recursion lives in the kernels package.  Per-tree seeds
come from one spawned seed stream, so parallel and serial training build
bit-identical forests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import kernels
from ..encode import FeatureMatrix
from ..errors import DataError


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 100
    max_depth: int = 16
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    features_per_split: float = 0.333  # fraction of features tried per split
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.max_depth < 0:
            raise DataError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise DataError("min_samples_leaf must be >= 1")
        if not 0.0 < self.features_per_split <= 1.0:
            raise DataError("features_per_split must be in (0, 1]")


@dataclass
class ForestModel:
    kind: str
    n_features: int
    trees: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]

    def predict(self, X) -> np.ndarray:
        rows = _dense_rows(X, self.n_features)
        # Accumulate tree outputs in declared order so the result never
        # depends on how training was scheduled.
        total = np.zeros(len(rows), dtype=np.float64)
        for feature, left, right, value in self.trees:
            total += kernels.predict_tree(feature, left, right, value, rows)
        return total / len(self.trees)


def _dense_rows(X, n_features: int) -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        if X.n_features != n_features:
            raise DataError(
                f"model expects {n_features} features, matrix has {X.n_features}"
            )
        return X.to_dense()
    rows = np.ascontiguousarray(X, dtype=np.uint8)
    if rows.ndim != 2 or rows.shape[1] != n_features:
        raise DataError(f"model expects rows of {n_features} features")
    return rows


def train_forest(m: FeatureMatrix, hp: ForestHyperparams, workers: int = 1) -> ForestModel:
    """Fit hp.n_trees bootstrap trees; deterministic in hp.seed."""
    if len(m) == 0:
        raise DataError("cannot train a forest on an empty matrix")
    X = m.to_dense()
    y = np.asarray(m.targets, dtype=np.float64)
    n = len(y)
    m_try = max(1, int(hp.features_per_split * m.n_features))

    jobs = []
    for child in np.random.SeedSequence(hp.seed).spawn(hp.n_trees):
        rng = np.random.default_rng(child)
        samples = rng.integers(0, n, size=n, dtype=np.int64)
        split_seed = int(rng.integers(0, 2**64, dtype=np.uint64))
        jobs.append((samples, split_seed))

    def fit(job):
        samples, split_seed = job
        return kernels.build_tree(
            X,
            y,
            samples,
            hp.max_depth,
            hp.min_samples_split,
            hp.min_samples_leaf,
            m_try,
            split_seed,
        )

    if workers > 1 and hp.n_trees > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(fit, jobs))
    else:
        trees = [fit(job) for job in jobs]
    return ForestModel(kind="forest", n_features=m.n_features, trees=trees)
