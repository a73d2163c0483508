"""Bootstrap-aggregated CART forest.

Each tree gets its own RNG stream derived from (seed, tree index), so the
fitted ensemble is identical whether trees are built sequentially or on a
thread pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..errors import DataError, TrainingError
from ..validation import check_labels, check_matrix
from .tree import TreeNodes, build_gini_tree


class RandomForestClassifier(BaseEstimator):
    """From-scratch random forest; prediction averages per-tree leaf class fractions."""

    def __init__(self, n_trees: int = 300, features_per_split: int | None = None,
                 max_depth: int | None = None, min_leaf: int = 1, seed: int = 0,
                 n_jobs: int = 1):
        self.n_trees = n_trees
        self.features_per_split = features_per_split
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y) -> "RandomForestClassifier":
        X = check_matrix(X)
        y = check_labels(y, n_rows=X.shape[0], require_both_classes=True)
        if self.n_trees < 1:
            raise TrainingError("forest needs at least one tree")
        n_features = X.shape[1]
        k = self.features_per_split or math.ceil(math.sqrt(n_features))

        def _fit_one(tree_index: int) -> TreeNodes:
            rng = np.random.default_rng([self.seed, tree_index])
            bootstrap = rng.integers(0, X.shape[0], size=X.shape[0])
            return build_gini_tree(X[bootstrap], y[bootstrap], rng, k,
                                   self.max_depth, self.min_leaf)

        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.trees_ = list(pool.map(_fit_one, range(self.n_trees)))
        else:
            self.trees_ = [_fit_one(t) for t in range(self.n_trees)]
        self.n_features_in_ = n_features
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_predict_input(X)
        votes = np.stack([tree.predict(X) for tree in self.trees_])
        return votes.mean(axis=0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def _check_predict_input(self, X) -> np.ndarray:
        if not hasattr(self, "trees_"):
            raise NotFittedError("RandomForestClassifier is not fitted")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X
