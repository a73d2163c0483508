"""Second-order boosting on logistic loss.

Each round fits a regression tree to the gradient and hessian of the loss
at the current scores; leaf outputs are regularized Newton steps, shrunk by
the learning rate when added to the score. Validation loss drives early
stopping; prediction sums stages up to the best round.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..errors import DataError, TrainingError
from ..validation import check_labels, check_matrix
from ._common import bce_with_logits, sigmoid
from .tree import build_newton_tree


class GradientBoostingClassifier(BaseEstimator):
    """From-scratch boosted trees for binary classification."""

    def __init__(self, rounds: int = 400, learning_rate: float = 0.1,
                 max_depth: int = 6, reg_lambda: float = 1.0, early_stop: int = 20,
                 min_leaf: int = 1):
        self.rounds = rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.early_stop = early_stop
        self.min_leaf = min_leaf

    def fit(self, X, y, X_val=None, y_val=None) -> "GradientBoostingClassifier":
        X = check_matrix(X)
        y = check_labels(y, n_rows=X.shape[0], require_both_classes=True)
        if not 0.0 < self.learning_rate <= 1.0:
            raise TrainingError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        has_val = X_val is not None
        if has_val:
            X_val = check_matrix(X_val)
            y_val = check_labels(y_val, n_rows=X_val.shape[0])

        prior = float(np.mean(y))
        self.base_score_ = math.log(prior / (1.0 - prior))
        self.trees_ = []
        self.train_curve_: list[float] = []
        self.val_curve_: list[float] = []

        yf = y.astype(np.float64)
        score = np.full(X.shape[0], self.base_score_)
        score_val = np.full(X_val.shape[0], self.base_score_) if has_val else None
        best_val = np.inf
        best_round = 0
        wait = 0

        for r in range(1, self.rounds + 1):
            p = sigmoid(score)
            grad = p - yf
            hess = p * (1.0 - p)
            if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
                raise TrainingError(f"non-finite boosting statistics at round {r}")
            tree = build_newton_tree(X, grad, hess, self.reg_lambda,
                                     self.max_depth, self.min_leaf)
            self.trees_.append(tree)
            score += self.learning_rate * tree.predict(X)
            self.train_curve_.append(bce_with_logits(score, yf))

            if has_val:
                score_val += self.learning_rate * tree.predict(X_val)
                val_loss = bce_with_logits(score_val, y_val.astype(np.float64))
                self.val_curve_.append(val_loss)
                if val_loss < best_val:
                    best_val = val_loss
                    best_round = r
                    wait = 0
                else:
                    wait += 1
                    if self.early_stop and wait >= self.early_stop:
                        break

        self.best_iteration_ = best_round if has_val else len(self.trees_)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict_input(X)
        score = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_[:self.best_iteration_]:
            score += self.learning_rate * tree.predict(X)
        return score

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def _check_predict_input(self, X) -> np.ndarray:
        if not hasattr(self, "trees_"):
            raise NotFittedError("GradientBoostingClassifier is not fitted")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X
