"""Model persistence: a JSON container that round-trips predictions bit-exactly.

JSON keeps floats through Python's repr, which reparses to the identical
double, and the text form carries no timestamps, so equal models serialize
to equal bytes.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataError
from .baseline import BaselineModel
from .forest import ForestModel
from .mlp import MlpModel

_FORMAT = "pathrep-model"
_VERSION = 1


def save_model(path, model) -> None:
    if isinstance(model, ForestModel):
        body = {
            "n_features": model.n_features,
            "trees": [
                {
                    "feature": f.tolist(),
                    "left": l.tolist(),
                    "right": r.tolist(),
                    "value": v.tolist(),
                }
                for f, l, r, v in model.trees
            ],
        }
        kind = "forest"
    elif isinstance(model, MlpModel):
        body = {
            "n_features": model.n_features,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
        kind = "mlp"
    elif isinstance(model, BaselineModel):
        body = {"overall_mean": model.overall_mean}
        if model.kind == "area":
            body.update(
                radius_m=model.radius_m,
                pickup_lon=model.pickup_lon.tolist(),
                pickup_lat=model.pickup_lat.tolist(),
                dropoff_lon=model.dropoff_lon.tolist(),
                dropoff_lat=model.dropoff_lat.tolist(),
                targets=model.targets.tolist(),
                planar=model.planar,
            )
        kind = f"baseline_{model.kind}"
    else:
        raise DataError(f"cannot save model of type {type(model).__name__}")
    doc = {"format": _FORMAT, "version": _VERSION, "kind": kind, **body}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model from {path}: {exc}") from None
    if doc.get("format") != _FORMAT:
        raise DataError(f"{path}: not a model file")
    if doc.get("version") != _VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind == "forest":
        trees = [
            (
                np.array(t["feature"], dtype=np.int32),
                np.array(t["left"], dtype=np.int32),
                np.array(t["right"], dtype=np.int32),
                np.array(t["value"], dtype=np.float64),
            )
            for t in doc["trees"]
        ]
        return ForestModel(kind="forest", n_features=int(doc["n_features"]), trees=trees)
    if kind == "mlp":
        return MlpModel(
            kind="mlp",
            n_features=int(doc["n_features"]),
            weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
        )
    if kind == "baseline_overall":
        return BaselineModel(kind="overall", overall_mean=float(doc["overall_mean"]))
    if kind == "baseline_area":
        return BaselineModel(
            kind="area",
            overall_mean=float(doc["overall_mean"]),
            radius_m=float(doc["radius_m"]),
            pickup_lon=np.array(doc["pickup_lon"], dtype=np.float64),
            pickup_lat=np.array(doc["pickup_lat"], dtype=np.float64),
            dropoff_lon=np.array(doc["dropoff_lon"], dtype=np.float64),
            dropoff_lat=np.array(doc["dropoff_lat"], dtype=np.float64),
            targets=np.array(doc["targets"], dtype=np.float64),
            planar=bool(doc["planar"]),
        )
    raise DataError(f"{path}: unknown model kind {kind!r}")
