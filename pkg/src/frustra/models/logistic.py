"""L2-regularized logistic regression trained by full-batch gradient descent.

Descent uses backtracking (Armijo) line search on the regularized
objective and stops when the gradient max-norm falls below ``tol``.
Per-iteration train and validation log loss are recorded for curve plots.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..errors import DataError, TrainingError
from ..validation import check_labels, check_matrix
from ._common import bce_with_logits, sigmoid

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-20


def loss_and_grad(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                  l2: float) -> tuple[float, np.ndarray, float]:
    """Regularized mean negative log-likelihood and its exact gradient.

    The bias is not regularized.
    """
    z = X @ w + b
    nll = bce_with_logits(z, y)
    loss = nll + 0.5 * l2 * float(w @ w)
    residual = sigmoid(z) - y
    grad_w = X.T @ residual / X.shape[0] + l2 * w
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


class LogisticRegressionClassifier(BaseEstimator):
    def __init__(self, l2: float = 0.0, max_iters: int = 2000, tol: float = 1e-6):
        self.l2 = l2
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y, X_val=None, y_val=None) -> "LogisticRegressionClassifier":
        X = check_matrix(X)
        y = check_labels(y, n_rows=X.shape[0], require_both_classes=True).astype(np.float64)
        if self.l2 < 0:
            raise TrainingError(f"l2 must be non-negative, got {self.l2}")
        has_val = X_val is not None
        if has_val:
            X_val = check_matrix(X_val)
            y_val = check_labels(y_val, n_rows=X_val.shape[0]).astype(np.float64)

        w = np.zeros(X.shape[1])
        b = 0.0
        self.train_curve_ = [bce_with_logits(X @ w + b, y)]
        self.val_curve_ = [bce_with_logits(X_val @ w + b, y_val)] if has_val else []

        iterations = 0
        for _ in range(self.max_iters):
            loss, grad_w, grad_b = loss_and_grad(X, y, w, b, self.l2)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at iteration {iterations}")
            if max(float(np.max(np.abs(grad_w))), abs(grad_b)) < self.tol:
                break
            grad_sq = float(grad_w @ grad_w) + grad_b * grad_b

            step = 1.0
            while step >= _MIN_STEP:
                w_new = w - step * grad_w
                b_new = b - step * grad_b
                z_new = X @ w_new + b_new
                new_loss = bce_with_logits(z_new, y) + 0.5 * self.l2 * float(w_new @ w_new)
                if new_loss <= loss - _ARMIJO_C * step * grad_sq:
                    break
                step *= 0.5
            else:
                break
            w, b = w_new, b_new
            iterations += 1
            self.train_curve_.append(bce_with_logits(z_new, y))
            if has_val:
                self.val_curve_.append(bce_with_logits(X_val @ w + b, y_val))

        final_loss, _, _ = loss_and_grad(X, y, w, b, self.l2)
        self.weights_ = w
        self.bias_ = b
        self.n_iter_ = iterations
        self.final_loss_ = final_loss
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError("LogisticRegressionClassifier is not fitted")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.weights_ + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)
