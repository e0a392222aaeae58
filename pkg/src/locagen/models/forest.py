"""Gini decision trees and a bootstrap random forest, numpy only."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = ["DecisionTree", "RandomForest", "ForestParams", "fit_tree", "fit_forest",
           "DegenerateModelWarning"]


class DegenerateModelWarning(UserWarning):
    pass


@dataclass
class DecisionTree:
    """Flat array representation; ``feature == -1`` marks a leaf.

    ``value[k]`` is the class histogram of the training rows reaching node k.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int
    min_samples_leaf: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_classes(self) -> int:
        return int(self.value.shape[1])

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X[r, f[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest class
        return np.argmax(self.value[self.apply(X)], axis=1)


def _best_split(Xn, yn, n_classes, features, min_leaf):
    """Lowest weighted-Gini split over ``features``; None if no valid split."""
    n = yn.size
    best = None
    onehot = np.zeros((n, n_classes))
    for f in features:
        order = np.argsort(Xn[:, f], kind="stable")
        xs = Xn[order, f]
        onehot[:] = 0.0
        onehot[np.arange(n), yn[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]           # counts for split after row i
        total = left[-1] + onehot[-1]
        right = total - left
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        gini = (nl - (left ** 2).sum(1) / nl) + (nr - (right ** 2).sum(1) / nr)
        gini = np.where(valid, gini, np.inf)
        i = int(np.argmin(gini))
        if best is None or gini[i] < best[0]:
            # threshold on an observed value, not a midpoint, so the fitted
            # forest commutes with any monotone transform of a feature
            best = (gini[i], f, xs[i])
    return best


def fit_tree(X, y, n_classes: int, max_depth: int = 12, min_samples_leaf: int = 2,
             max_features: int | None = None, rng=None) -> DecisionTree:
    """Greedy CART growth with Gini impurity.

    ``max_features`` features are tried first at each node (in random
    order); the rest are only tried if none of those yields a valid split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n_feat = X.shape[1]
    k = n_feat if max_features is None else max(1, min(int(max_features), n_feat))
    rng = np.random.default_rng(rng)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y[rows], minlength=n_classes).astype(float))
        return len(feature) - 1

    root = new_node(np.arange(y.size))
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = value[node]
        if depth >= max_depth or rows.size < 2 * min_samples_leaf or np.count_nonzero(counts) <= 1:
            continue
        order = rng.permutation(n_feat)
        Xn, yn = X[rows], y[rows]
        split = _best_split(Xn, yn, n_classes, order[:k], min_samples_leaf)
        if split is None and k < n_feat:
            split = _best_split(Xn, yn, n_classes, order[k:], min_samples_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = Xn[:, f] <= thr
        li, ri = new_node(rows[mask]), new_node(rows[~mask])
        feature[node], threshold[node], left[node], right[node] = int(f), float(thr), li, ri
        stack.append((ri, rows[~mask], depth + 1))
        stack.append((li, rows[mask], depth + 1))

    return DecisionTree(np.array(feature, dtype=np.int64), np.array(threshold),
                        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                        np.array(value).reshape(-1, n_classes), max_depth, min_samples_leaf)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    max_features: int | None = None      # None: floor(sqrt(n_features))
    bootstrap: bool = True
    seed: int = 0


@dataclass
class RandomForest:
    trees: list
    n_classes: int
    params: ForestParams

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        v = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in self.trees:
            np.add.at(v, (rows, t.predict(X)), 1)
        return v

    def predict(self, X) -> np.ndarray:
        """Majority vote, ties to the lowest class index."""
        return np.argmax(self.votes(X), axis=1)


def fit_forest(X, y, n_classes: int, params: ForestParams = ForestParams(),
               threads: int = 1) -> RandomForest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size < 2:
        warnings.warn("training labels hold a single class; the forest is a constant predictor",
                      DegenerateModelWarning, stacklevel=2)
    k = params.max_features
    if k is None:
        k = max(1, int(math.sqrt(X.shape[1])))

    def grow(i):
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(i,)))
        rows = rng.integers(0, y.size, y.size) if params.bootstrap else np.arange(y.size)
        return fit_tree(X[rows], y[rows], n_classes, params.max_depth,
                        params.min_samples_leaf, k, rng)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(grow, range(params.n_trees)))
    else:
        trees = [grow(i) for i in range(params.n_trees)]
    return RandomForest(trees, n_classes, params)
