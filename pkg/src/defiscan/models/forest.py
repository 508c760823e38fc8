"""Random forest of Gini CART trees with mean-decrease-in-impurity importances."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._common import as_design, check_xy

LEAF = -1


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Counter-based stream for one tree, independent of build order."""
    return np.random.Generator(np.random.Philox(key=seed + tree_index))


@dataclass(frozen=True)
class DecisionTree:
    """Flat node arena. ``feature[i] == LEAF`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    class_counts: np.ndarray  # (n_nodes, 2)
    impurity_decrease: np.ndarray  # weighted by rows reaching the node
    n_features: int
    max_depth: int | None = None

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_splits(self) -> int:
        return int(np.sum(self.feature != LEAF))

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = as_design(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f != LEAF
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X[r, f[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        counts = self.class_counts[self.apply(X)]
        # a leaf tie goes to the violation class
        return (counts[:, 1] >= counts[:, 0]).astype(int)

    def feature_importances(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(imp, self.feature[internal], self.impurity_decrease[internal])
        total = imp.sum()
        return imp / total if total > 0 else imp


def _gini_mass(c0, c1):
    """n * gini for a node holding c0/c1 rows."""
    n = c0 + c1
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, n - (c0 * c0 + c1 * c1) / np.where(n > 0, n, 1), 0.0)


def _best_split(Xn: np.ndarray, yn: np.ndarray, features: np.ndarray):
    """Exhaustive Gini search over ``features``; first best wins ties.

    Returns (feature, threshold, child impurity mass) or None.
    """
    sub = Xn[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = yn[order]
    n = yn.shape[0]
    n_left = np.arange(1, n, dtype=float)[:, None]
    c1_left = np.cumsum(ys, axis=0)[:-1].astype(float)
    c0_left = n_left - c1_left
    c1_tot = float(yn.sum())
    c1_right = c1_tot - c1_left
    c0_right = (n - n_left) - c1_right
    cost = _gini_mass(c0_left, c1_left) + _gini_mass(c0_right, c1_right)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    flat = int(np.argmin(cost.T))  # ties: earliest candidate, then lowest threshold
    k, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, k], xs[pos + 1, k]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:  # guard against rounding onto the upper value
        threshold = lo
    return int(features[k]), float(threshold), float(cost[pos, k])


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    features_per_split: int,
    rng: np.random.Generator | None,
    *,
    max_depth: int | None = None,
    min_samples_split: int = 2,
) -> DecisionTree:
    """Grow one CART tree on all rows of X (bootstrap happens upstream).

    At every node the candidate features are the first ``features_per_split``
    non-constant columns of a fresh random permutation; with ``rng=None`` the
    first ones in index order.
    """
    n, d = X.shape
    y = y.astype(np.int64)
    feature, threshold, left, right, counts, decrease = [], [], [], [], [], []

    def new_node(idx):
        c1 = int(y[idx].sum())
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append((len(idx) - c1, c1))
        decrease.append(0.0)
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        c0, c1 = counts[node]
        if c0 == 0 or c1 == 0 or len(idx) < min_samples_split:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        Xn = X[idx]
        nonconst = Xn.max(axis=0) > Xn.min(axis=0)
        order = rng.permutation(d) if rng is not None else np.arange(d)
        # sorted so equal-gain ties always resolve to the lowest column index
        cand = np.sort(order[nonconst[order]][:features_per_split])
        if cand.size == 0:
            continue
        found = _best_split(Xn, y[idx], cand)
        if found is None:
            continue
        f, thr, child_mass = found
        go_left = Xn[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        decrease[node] = float(_gini_mass(c0, c1)) - child_mass
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # push right first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
        np.array(decrease, dtype=float),
        d,
        max_depth,
    )


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[DecisionTree, ...]
    n_trees: int
    features_per_split: int
    seed: int
    importances: np.ndarray
    n_features: int
    max_depth: int | None = None
    bootstrap: bool = True
    feature_names: tuple[str, ...] | None = None

    def votes(self, X) -> np.ndarray:
        """Per-tree predictions, shape (n_trees, n_rows)."""
        X = as_design(X, self.n_features)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        v = self.votes(X)
        ones = v.sum(axis=0)
        # vote ties go to the violation class
        return (2 * ones >= v.shape[0]).astype(int)


def forest_importances(trees) -> np.ndarray:
    """Average of per-tree normalized impurity decreases, renormalized.

    Trees that never split carry no importance information and are skipped.
    """
    per_tree = [t.feature_importances() for t in trees if t.n_splits > 0]
    if not per_tree:
        return np.zeros(trees[0].n_features)
    imp = np.mean(per_tree, axis=0)
    total = imp.sum()
    return imp / total if total > 0 else imp


def default_features_per_split(n_features: int) -> int:
    return max(1, math.isqrt(n_features))


def fit_random_forest(
    X,
    y,
    n_trees: int = 100,
    features_per_split: int | None = None,
    seed: int = 0,
    *,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    bootstrap: bool = True,
    allow_single_class: bool = False,
    n_jobs: int = 1,
    feature_names=None,
) -> RandomForestModel:
    """Train ``n_trees`` trees, tree ``t`` drawing from ``tree_rng(seed, t)``.

    Single-class labels raise DegenerateLabelsError unless
    ``allow_single_class`` is set, in which case every tree is one leaf and
    the model is constant.
    """
    X, y = check_xy(X, y, need_two_classes=not allow_single_class)
    n, d = X.shape
    if n < 2:
        raise ValueError("random forest needs at least 2 rows")
    yi = y.astype(np.int64)
    k = default_features_per_split(d) if features_per_split is None else int(features_per_split)
    k = max(1, min(k, d))

    def grow(t):
        rng = tree_rng(seed, t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        return build_tree(X[rows], yi[rows], k, rng, max_depth=max_depth,
                          min_samples_split=min_samples_split)

    if n_jobs == 1:
        trees = tuple(grow(t) for t in range(n_trees))
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = tuple(pool.map(grow, range(n_trees)))

    names = tuple(feature_names) if feature_names is not None else None
    return RandomForestModel(trees, n_trees, k, seed, forest_importances(trees), d,
                             max_depth, bootstrap, names)
