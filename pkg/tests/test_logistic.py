import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defiscan.errors import DegenerateLabelsError
from defiscan.models import LogisticModel, fit_logistic, predict
from defiscan.models.logistic import log_likelihood


def test_single_class_rejected():
    with pytest.raises(DegenerateLabelsError):
        fit_logistic(np.arange(4.0).reshape(-1, 1), np.ones(4))


def test_separable_one_dimensional():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    model = fit_logistic(X, y)
    assert model.weights[0] > 0
    assert np.all(model.predict(X) == y)
    assert not model.converged and model.iterations_used == 1000


def test_zero_weights_tie_goes_to_violation():
    model = LogisticModel(np.zeros(2), 0.0, True, 0)
    assert np.all(model.predict_proba(np.ones((3, 2))) == 0.5)
    assert np.all(predict(model, np.ones((3, 2))) == 1)


def _noisy_instance(seed, n=50, p=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    w = rng.normal(scale=0.5, size=p)
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ w)))).astype(float)
    return X, y


def finite_difference_gradient(f, theta, h=1e-6):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def test_gradient_vanishes_at_optimum_by_finite_differences():
    X, y = _noisy_instance(3)
    model = fit_logistic(X, y)
    assert model.converged
    theta = np.r_[model.weights, model.intercept]
    # summed log-likelihood, independent of the solver's own gradient code
    f = lambda t: float(np.sum(y * (X @ t[:-1] + t[-1]) - np.log1p(np.exp(X @ t[:-1] + t[-1]))))
    g = finite_difference_gradient(f, theta)
    assert np.max(np.abs(g)) <= 1e-5 * X.shape[0]
    assert np.max(np.abs(g / X.shape[0])) <= 1e-5


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_log_likelihood_never_decreases(seed):
    X, y = _noisy_instance(seed, n=30, p=4)
    if np.unique(y).size < 2:
        y[0] = 1 - y[0]
    model = fit_logistic(X, y, max_iter=200)
    h = np.array(model.history)
    assert np.all(np.diff(h) >= -1e-15)
    assert h[-1] == pytest.approx(log_likelihood(model.weights, model.intercept, X, y))


def test_probabilities_strictly_inside_unit_interval():
    X = np.array([[-50.0], [50.0]])
    model = fit_logistic(X, np.array([0, 1]), max_iter=50)
    p = model.predict_proba(np.array([[-1e6], [1e6]]))
    assert np.all((p > 0) & (p < 1))


def test_deterministic():
    X, y = _noisy_instance(9)
    a, b = fit_logistic(X, y), fit_logistic(X, y)
    assert np.array_equal(a.weights, b.weights) and a.intercept == b.intercept
