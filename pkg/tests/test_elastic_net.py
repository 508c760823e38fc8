import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defiscan.errors import InvalidDataError
from defiscan.features import fit_standardization
from defiscan.models import feature_importances, fit_elastic_net, kkt_residuals


def standardized(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    return fit_standardization(X).apply(X), rng


def test_zero_penalty_matches_normal_equations():
    X, rng = standardized(10, 3, 0)
    y = X @ np.array([0.5, -1.0, 2.0]) + 0.3 + rng.normal(scale=0.1, size=10)
    model = fit_elastic_net(X, y, alpha=0.5, strength=0.0, tol=1e-12)
    A = np.c_[X, np.ones(10)]
    ols = np.linalg.solve(A.T @ A, A.T @ y)
    np.testing.assert_allclose(model.coefficients, ols[:3], atol=1e-6)
    assert model.intercept == pytest.approx(ols[3], abs=1e-6)


def test_huge_lasso_penalty_zeroes_everything():
    X, rng = standardized(30, 5, 2)
    y = rng.integers(0, 2, 30).astype(float)
    model = fit_elastic_net(X, y, alpha=1.0, strength=1e6)
    assert np.all(model.coefficients == 0.0)
    assert model.intercept == pytest.approx(y.mean())
    assert np.all(feature_importances(model) == 0)


def test_rejects_non_finite():
    X = np.ones((3, 2))
    X[0, 0] = np.nan
    with pytest.raises(InvalidDataError):
        fit_elastic_net(X, np.zeros(3))


def test_parameter_validation():
    with pytest.raises(ValueError):
        fit_elastic_net(np.eye(3), np.zeros(3), alpha=1.5)
    with pytest.raises(ValueError):
        fit_elastic_net(np.eye(3), np.zeros(3), strength=-1)


@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.sampled_from([0.001, 0.01, 0.1, 1.0]))
@settings(max_examples=40, deadline=None)
def test_kkt_conditions(seed, alpha, strength):
    X, rng = standardized(40, 8, seed)
    y = (X[:, 0] + rng.normal(size=40) > 0).astype(float)
    model = fit_elastic_net(X, y, alpha=alpha, strength=strength)
    assert model.converged
    assert np.max(kkt_residuals(model, X, y)) <= 1e-4


def test_sparsity_grows_with_l1():
    X, rng = standardized(100, 20, 5)
    y = (X[:, :3].sum(axis=1) + rng.normal(size=100) > 0).astype(float)
    nz = [fit_elastic_net(X, y, alpha=1.0, strength=s).nonzero.size for s in (0.001, 0.05, 0.2)]
    assert nz[0] >= nz[1] >= nz[2]
