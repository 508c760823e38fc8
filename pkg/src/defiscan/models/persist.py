"""JSON persistence for fitted models.

Layout (version 1)::

    {"format": "defiscan-model", "version": 1, "kind": <kind>,
     "feature_names": [...] | null, "params": {...}, ...arrays...}

``kind`` is ``elastic_net``, ``logistic`` or ``random_forest``. Floats are
written with ``repr`` precision, so a reloaded model predicts bit-identically.
Forest trees are stored as their node arenas.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .elastic_net import ElasticNetModel
from .forest import DecisionTree, RandomForestModel
from .logistic import LogisticModel

FORMAT = "defiscan-model"
VERSION = 1


def _tree_to_dict(t: DecisionTree) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "class_counts": t.class_counts.tolist(),
        "impurity_decrease": t.impurity_decrease.tolist(),
    }


def _tree_from_dict(d: dict, n_features: int, max_depth) -> DecisionTree:
    return DecisionTree(
        np.array(d["feature"], dtype=np.int64),
        np.array(d["threshold"], dtype=float),
        np.array(d["left"], dtype=np.int64),
        np.array(d["right"], dtype=np.int64),
        np.array(d["class_counts"], dtype=np.int64).reshape(-1, 2),
        np.array(d["impurity_decrease"], dtype=float),
        n_features,
        max_depth,
    )


def model_to_dict(model) -> dict:
    out = {"format": FORMAT, "version": VERSION,
           "feature_names": list(model.feature_names) if model.feature_names else None}
    if isinstance(model, ElasticNetModel):
        out.update(kind="elastic_net",
                   params={"alpha": model.alpha, "strength": model.strength,
                           "sweeps": model.sweeps, "converged": model.converged},
                   coefficients=model.coefficients.tolist(), intercept=model.intercept)
    elif isinstance(model, LogisticModel):
        out.update(kind="logistic",
                   params={"converged": model.converged, "iterations_used": model.iterations_used},
                   weights=model.weights.tolist(), intercept=model.intercept)
    elif isinstance(model, RandomForestModel):
        out.update(kind="random_forest",
                   params={"n_trees": model.n_trees, "features_per_split": model.features_per_split,
                           "seed": model.seed, "max_depth": model.max_depth,
                           "bootstrap": model.bootstrap, "n_features": model.n_features},
                   importances=model.importances.tolist(),
                   trees=[_tree_to_dict(t) for t in model.trees])
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return out


def model_from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise ValueError("not a defiscan model document")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported model format version {d.get('version')}")
    names = tuple(d["feature_names"]) if d.get("feature_names") else None
    p = d["params"]
    kind = d["kind"]
    if kind == "elastic_net":
        return ElasticNetModel(p["alpha"], p["strength"], np.array(d["coefficients"], dtype=float),
                               float(d["intercept"]), p["sweeps"], p["converged"], names)
    if kind == "logistic":
        return LogisticModel(np.array(d["weights"], dtype=float), float(d["intercept"]),
                             p["converged"], p["iterations_used"], names)
    if kind == "random_forest":
        trees = tuple(_tree_from_dict(t, p["n_features"], p["max_depth"]) for t in d["trees"])
        return RandomForestModel(trees, p["n_trees"], p["features_per_split"], p["seed"],
                                 np.array(d["importances"], dtype=float), p["n_features"],
                                 p["max_depth"], p["bootstrap"], names)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path: str | os.PathLike):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
