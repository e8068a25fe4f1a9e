"""Sparse binary path representations for predicting trip outcomes on road
networks.

The pipeline: load or synthesize a road graph, snap trip endpoints to nodes
and route them, encode each route as a sparse indicator vector (six
representations of varying granularity), then score regression models and
distance-window baselines under k-fold cross validation.  Hot loops run in a
compiled extension with a pure-Python fallback (see pathrep.kernels).
"""

from .encode import FeatureMatrix, FeatureVector, ReprConfig, encode_dataset, encode_path
from .errors import DataError, NoRouteError, PathrepError, TrainingError
from .eval import ExperimentConfig, EvalReport, emit_report, kfold_split, rmse, run_experiment
from .graph import Coordinate, Graph, Path, load_graph, shortest_path
from .ingest import PathDataset, TripRecord, load_trips, snap_and_route

__version__ = "0.1.0"

__all__ = [
    "Coordinate",
    "DataError",
    "EvalReport",
    "ExperimentConfig",
    "FeatureMatrix",
    "FeatureVector",
    "Graph",
    "NoRouteError",
    "Path",
    "PathDataset",
    "PathrepError",
    "ReprConfig",
    "TrainingError",
    "TripRecord",
    "__version__",
    "emit_report",
    "encode_dataset",
    "encode_path",
    "kfold_split",
    "load_graph",
    "load_trips",
    "rmse",
    "run_experiment",
    "shortest_path",
    "snap_and_route",
]
