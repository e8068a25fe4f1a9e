"""Predictors: coordinate baselines, random decision forest, dropout MLP."""

from .baseline import (
    DEFAULT_AREA_RADII_M,
    BaselineModel,
    predict_baseline,
    train_baseline_area,
    train_baseline_overall,
    tune_area_radius,
)
from .forest import ForestHyperparams, ForestModel, train_forest
from .io import load_model, save_model
from .mlp import MlpHyperparams, MlpModel, layer_widths, train_mlp
from .search import GridSearchResult, Hyperparams, cross_val_rmse, grid_search

__all__ = [
    "BaselineModel",
    "DEFAULT_AREA_RADII_M",
    "ForestHyperparams",
    "ForestModel",
    "GridSearchResult",
    "Hyperparams",
    "MlpHyperparams",
    "MlpModel",
    "cross_val_rmse",
    "grid_search",
    "layer_widths",
    "load_model",
    "predict",
    "predict_baseline",
    "save_model",
    "train_baseline_area",
    "train_baseline_overall",
    "train_forest",
    "train_mlp",
    "tune_area_radius",
]


def predict(model, X):
    """Predict one value per row of X with a trained forest or MLP."""
    return model.predict(X)
