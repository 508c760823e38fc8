import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defiscan.errors import DegenerateLabelsError, ShapeError
from defiscan.models import (build_tree, feature_importances, fit_random_forest, load_model,
                             predict, save_model)
from defiscan.models.forest import forest_importances


def gini_mass(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    p1 = sum(labels) / n
    return n * (1 - p1**2 - (1 - p1) ** 2)


def oracle_cart(X, y, rows=None):
    """Exhaustive CART: every feature, every midpoint, strict improvement only."""
    rows = list(range(len(y))) if rows is None else rows
    labels = [y[r] for r in rows]
    if len(set(labels)) < 2 or len(rows) < 2:
        return ("leaf", labels.count(0), labels.count(1))
    best = None
    for f in range(X.shape[1]):
        values = sorted(set(X[r, f] for r in rows))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            left = [r for r in rows if X[r, f] <= thr]
            right = [r for r in rows if X[r, f] > thr]
            cost = gini_mass([y[r] for r in left]) + gini_mass([y[r] for r in right])
            if best is None or cost < best[0] - 1e-12:
                best = (cost, f, thr, left, right)
    if best is None:
        return ("leaf", labels.count(0), labels.count(1))
    _, f, thr, left, right = best
    return ("split", f, thr, oracle_cart(X, y, left), oracle_cart(X, y, right))


def as_nested(tree, node=0):
    if tree.feature[node] == -1:
        c = tree.class_counts[node]
        return ("leaf", int(c[0]), int(c[1]))
    return ("split", int(tree.feature[node]), float(tree.threshold[node]),
            as_nested(tree, tree.left[node]), as_nested(tree, tree.right[node]))


def same_tree(a, b):
    if a[0] != b[0]:
        return False
    if a[0] == "leaf":
        return a == b
    return (a[1] == b[1] and np.isclose(a[2], b[2]) and same_tree(a[3], b[3])
            and same_tree(a[4], b[4]))


small_instances = st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.integers(0, 4), min_size=3, max_size=3), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n)))


@given(small_instances)
@settings(max_examples=150)
def test_full_feature_single_tree_equals_exhaustive_cart(inst):
    X = np.array(inst[0], dtype=float)
    y = np.array(inst[1])
    if np.unique(y).size < 2:
        y[0] = 1 - y[0]
    forest = fit_random_forest(X, y, n_trees=1, features_per_split=X.shape[1], bootstrap=False, seed=7)
    assert same_tree(as_nested(forest.trees[0]), oracle_cart(X, y))


def test_single_class_rejected_unless_allowed():
    X = np.arange(10.0).reshape(5, 2)
    with pytest.raises(DegenerateLabelsError):
        fit_random_forest(X, np.zeros(5))
    m = fit_random_forest(X, np.zeros(5), n_trees=1, allow_single_class=True)
    assert m.trees[0].n_nodes == 1
    assert np.all(predict(m, np.random.default_rng(0).normal(size=(20, 2)) * 100) == 0)
    m = fit_random_forest(X, np.ones(5), n_trees=3, allow_single_class=True)
    assert np.all(m.predict(X) == 1)


def test_seed_determinism():
    rng = np.random.default_rng(0)
    X = rng.poisson(3, size=(60, 9)).astype(float)
    y = (X[:, 0] + rng.normal(size=60) > 3).astype(int)
    a = fit_random_forest(X, y, n_trees=20, seed=11)
    b = fit_random_forest(X, y, n_trees=20, seed=11, n_jobs=4)
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
    assert np.array_equal(a.importances, b.importances)
    c = fit_random_forest(X, y, n_trees=20, seed=12)
    assert not np.array_equal(a.importances, c.importances)


def perfect_stump_exists(X, y):
    for f in range(X.shape[1]):
        for thr in np.unique(X[:, f]):
            side = X[:, f] <= thr
            if np.all(y[side] == y[side][0]) and np.all(y[~side] == y[~side][0]) and side.any() and (~side).any():
                return True
    return False


def test_four_point_separable():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [2.0, 0.0], [2.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    assert perfect_stump_exists(X, y)
    m = fit_random_forest(X, y, n_trees=25, seed=3)
    assert np.all(m.predict(X) == y)
    assert max(t.n_nodes for t in m.trees) >= 3


def test_only_feature_zero_split():
    X = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_random_forest(X, y, n_trees=10, seed=0)
    np.testing.assert_array_equal(feature_importances(m), [1.0, 0.0])


@given(st.integers(0, 5000))
@settings(max_examples=25, deadline=None)
def test_importances_normalized(seed):
    rng = np.random.default_rng(seed)
    X = rng.poisson(2, size=(30, 6)).astype(float)
    y = rng.integers(0, 2, 30)
    if np.unique(y).size < 2:
        y[0] = 1 - y[0]
    m = fit_random_forest(X, y, n_trees=5, seed=seed)
    if any(t.n_splits for t in m.trees):
        assert m.importances.sum() == pytest.approx(1.0)
    assert np.all(m.importances >= 0)


def test_trees_partition_rows():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 4))
    y = (X[:, 1] > 0).astype(int)
    t = build_tree(X, y, 2, np.random.default_rng(1))
    leaves = t.apply(X)
    for node in range(t.n_nodes):
        if t.feature[node] != -1:
            assert t.class_counts[t.left[node]].sum() > 0
            assert t.class_counts[t.right[node]].sum() > 0
            assert np.array_equal(t.class_counts[node], t.class_counts[t.left[node]] + t.class_counts[t.right[node]])
    for leaf in np.unique(leaves):
        assert np.bincount(y[leaves == leaf], minlength=2).tolist() == t.class_counts[leaf].tolist()


@given(st.integers(0, 5000))
@settings(max_examples=20, deadline=None)
def test_monotone_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 20, size=(40, 3)).astype(float)
    y = (X[:, 0] + rng.normal(scale=3, size=40) > 10).astype(int)
    if np.unique(y).size < 2:
        y[0] = 1 - y[0]
    Xt = X.copy()
    Xt[:, 0] = X[:, 0] ** 3 + 2 * X[:, 0]
    a = fit_random_forest(X, y, n_trees=7, seed=seed)
    b = fit_random_forest(Xt, y, n_trees=7, seed=seed)
    assert np.array_equal(a.predict(X), b.predict(Xt))


def test_majority_vote_matches_tally():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(40, 5))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    m = fit_random_forest(X, y, n_trees=3, seed=1)
    Q = rng.normal(size=(100, 5))
    per_tree = [[int(v) for v in t.predict(Q)] for t in m.trees]
    tally = [1 if sum(col) >= 2 else 0 for col in zip(*per_tree)]
    assert m.predict(Q).tolist() == tally


def test_even_vote_tie_goes_to_violation():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(int)
    m = fit_random_forest(X, y, n_trees=2, seed=0)
    v = m.votes(X)
    tied = v.sum(axis=0) == 1
    assert np.all(m.predict(X)[tied] == 1)


def test_shape_mismatch():
    m = fit_random_forest(np.eye(4), [0, 1, 0, 1], n_trees=2)
    with pytest.raises(ShapeError):
        m.predict(np.ones((2, 3)))


def test_forest_importances_skip_stumpless_trees():
    X = np.array([[0.0], [1.0]])
    t_split = build_tree(X, np.array([0, 1]), 1, None)
    t_leaf = build_tree(X, np.array([1, 1]), 1, None)
    np.testing.assert_array_equal(forest_importances((t_split, t_leaf)), [1.0])


def test_persistence_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 4))
    y = (X[:, 0] > 0).astype(int)
    m = fit_random_forest(X, y, n_trees=10, seed=2, feature_names=["A", "B", "C", "D"])
    save_model(m, tmp_path / "rf.json")
    back = load_model(tmp_path / "rf.json")
    Q = rng.normal(size=(200, 4))
    assert np.array_equal(m.predict(Q), back.predict(Q))
    assert np.array_equal(m.importances, back.importances)
    assert back.feature_names == ("A", "B", "C", "D")
    for ta, tb in zip(m.trees, back.trees):
        assert np.array_equal(ta.threshold, tb.threshold)
