"""Unpenalized logistic regression fitted by gradient ascent with backtracking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._common import as_design, check_xy

_P_LO = np.finfo(float).tiny
_P_HI = 1.0 - np.finfo(float).epsneg


def log_likelihood(w, b, X, y) -> float:
    """Mean Bernoulli log-likelihood, computed without overflow."""
    z = X @ w + b
    return float(np.mean(y * z - np.logaddexp(0.0, z)))


def gradient(w, b, X, y):
    r = y - expit(X @ w + b)
    n = X.shape[0]
    return X.T @ r / n, float(r.sum() / n)


def separates(w, b, X, y) -> bool:
    """True when every row lies strictly on its own class's side."""
    margin = (2.0 * y - 1.0) * (X @ w + b)
    return bool(np.all(margin > 0))


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    converged: bool
    iterations_used: int
    feature_names: tuple[str, ...] | None = None
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def predict_proba(self, X) -> np.ndarray:
        p = expit(as_design(X, self.n_features) @ self.weights + self.intercept)
        return np.clip(p, _P_LO, _P_HI)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)


def fit_logistic(
    X,
    y,
    max_iter: int = 1000,
    *,
    tol: float = 1e-6,
    armijo: float = 1e-4,
    feature_names=None,
) -> LogisticModel:
    """Maximize the mean log-likelihood.

    Each step starts from twice the previous accepted step and halves until
    the Armijo condition holds, so the objective never decreases. Converged
    means the gradient max-norm fell below ``tol`` while the fit does not
    separate the classes. Once the current fit separates them the maximum
    likelihood estimate does not exist, so iteration runs on to ``max_iter``
    and reports ``converged=False``.
    """
    X, y = check_xy(X, y, need_two_classes=True)
    p = X.shape[1]
    w = np.zeros(p)
    b = 0.0
    ll = log_likelihood(w, b, X, y)
    history = [ll]
    step = 1.0
    converged = False
    it = 0
    while it < max_iter:
        gw, gb = gradient(w, b, X, y)
        gmax = max(np.max(np.abs(gw)) if p else 0.0, abs(gb))
        if gmax < tol and not separates(w, b, X, y):
            converged = True
            break
        it += 1
        sq = float(gw @ gw + gb * gb)
        t = min(step * 2.0, 1e6)
        while True:
            w_new = w + t * gw
            b_new = b + t * gb
            ll_new = log_likelihood(w_new, b_new, X, y)
            if ll_new >= ll + armijo * t * sq:
                break
            t *= 0.5
            if t < 1e-20:
                # no ascent possible at float precision
                w_new, b_new, ll_new = w, b, ll
                break
        if t < 1e-20:
            break
        w, b, ll, step = w_new, b_new, ll_new, t
        history.append(ll)
    else:
        gw, gb = gradient(w, b, X, y)
        converged = (max(np.max(np.abs(gw)) if p else 0.0, abs(gb)) < tol
                     and not separates(w, b, X, y))

    names = tuple(feature_names) if feature_names is not None else None
    return LogisticModel(w, float(b), converged, it, names, tuple(history))
