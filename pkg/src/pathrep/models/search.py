"""Exhaustive hyper-parameter search scored by k-fold cross-validation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from ..encode import FeatureMatrix
from ..errors import DataError, TrainingError
from .forest import ForestHyperparams, train_forest
from .mlp import MlpHyperparams, train_mlp

Hyperparams = Union[ForestHyperparams, MlpHyperparams]


@dataclass(frozen=True)
class GridSearchResult:
    best_params: Hyperparams
    best_score: float  # mean k-fold RMSE
    table: tuple[tuple[Hyperparams, float], ...]  # every cell, grid order


def cross_val_rmse(m: FeatureMatrix, params: Hyperparams, k_folds: int, seed: int) -> float:
    """Mean validation RMSE over k folds; inf when a cell fails to train."""
    # Imported here: eval depends on models at module load, not the reverse.
    from ..eval import kfold_split, rmse

    scores = []
    for train_idx, val_idx in kfold_split(len(m), k_folds, seed).splits():
        train = m.subset(train_idx)
        val = m.subset(val_idx)
        try:
            model = _fit(train, params)
        except TrainingError:
            return math.inf
        scores.append(rmse(model.predict(val), val.targets))
    return float(sum(scores) / len(scores))


def _fit(m: FeatureMatrix, params: Hyperparams):
    if isinstance(params, ForestHyperparams):
        return train_forest(m, params)
    if isinstance(params, MlpHyperparams):
        return train_mlp(m, params)
    raise DataError(f"unsupported hyperparameter type {type(params).__name__}")


def grid_search(
    grid: Sequence[Hyperparams], m: FeatureMatrix, k_folds: int, seed: int = 0
) -> GridSearchResult:
    """Score every cell on identical folds; ties keep the earliest cell."""
    if len(grid) == 0:
        raise DataError("empty hyperparameter grid")
    table = []
    best = None
    best_score = math.inf
    for params in grid:
        score = cross_val_rmse(m, params, k_folds, seed)
        table.append((params, score))
        if score < best_score:
            best_score = score
            best = params
    if best is None:
        # Every cell failed; surface the first so the caller sees the grid.
        best = grid[0]
    return GridSearchResult(best_params=best, best_score=best_score, table=tuple(table))
