from __future__ import annotations

import numpy as np

from ..errors import DegenerateLabelsError, InvalidDataError, ShapeError


def as_design(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeError(f"model expects {n_features} columns, got {X.shape[1]}")
    return X


def check_xy(X, y, *, need_two_classes: bool = False):
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidDataError("non-finite value in model input")
    if need_two_classes and np.unique(y).size < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    return X, y
