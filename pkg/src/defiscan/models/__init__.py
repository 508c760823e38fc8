"""Model families: elastic net, logistic regression and random forest."""

from __future__ import annotations

import numpy as np

from ..errors import NotFittedError
from .elastic_net import ElasticNetModel, fit_elastic_net, kkt_residuals
from .forest import DecisionTree, RandomForestModel, build_tree, fit_random_forest
from .logistic import LogisticModel, fit_logistic
from .persist import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "DecisionTree", "ElasticNetModel", "LogisticModel", "RandomForestModel",
    "build_tree", "feature_importances", "fit_elastic_net", "fit_logistic",
    "fit_random_forest", "kkt_residuals", "load_model", "model_from_dict",
    "model_to_dict", "predict", "save_model",
]


def predict(model, X) -> np.ndarray:
    """0/1 predictions; scores or probabilities of exactly 0.5 map to 1."""
    if model is None:
        raise NotFittedError("model has not been fitted")
    return model.predict(X)


def feature_importances(model) -> np.ndarray:
    """Gini importances for forests, signed coefficients for linear models.

    Rank linear models by ``np.abs`` of the result.
    """
    if model is None:
        raise NotFittedError("model has not been fitted")
    if isinstance(model, RandomForestModel):
        return model.importances.copy()
    if isinstance(model, ElasticNetModel):
        return model.coefficients.copy()
    if isinstance(model, LogisticModel):
        return model.weights.copy()
    raise TypeError(f"unsupported model type {type(model).__name__}")
