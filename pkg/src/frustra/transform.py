"""Balanced stratified splitting and train-fitted power transforms.

The split downsamples the majority class so every split carries equal
class counts, then partitions each class into train/val/test with a seeded
permutation. The power transform fits one lambda per feature by maximizing
the Gaussian log-likelihood of the transformed training column, then
standardizes with train statistics; validation and test data are always
transformed with parameters fitted on train.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigError, DataError
from .fileio import meta_line, open_for_read, open_for_write
from .validation import check_labels, check_matrix

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, slots=True)
class SplitSpec:
    """Fractions and seed for the balanced three-way split."""

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ConfigError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(fracs)!r}")


@dataclass(frozen=True, slots=True)
class SplitResult:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def balanced_split(y: Sequence[int], spec: SplitSpec,
                   ids: Sequence[str] | None = None) -> SplitResult:
    """Class-balanced train/val/test membership over row indices.

    Takes ``m = min(class counts)`` rows per class without replacement,
    then assigns ``floor(train_frac * m)`` to train, ``floor(val_frac * m)``
    to val, and the remainder to test, per class. When ``ids`` are given,
    membership depends only on (ids, seed), not on row order.
    """
    labels = check_labels(np.asarray(y), require_both_classes=True)
    if ids is not None:
        if len(ids) != labels.shape[0]:
            raise DataError("ids length must match labels")
        if len(set(ids)) != len(ids):
            raise DataError("ids must be unique for order-independent splitting")
        id_array = np.asarray(ids, dtype=object)

    m = min(int(np.sum(labels == 0)), int(np.sum(labels == 1)))
    if m < 10:
        raise DataError(f"minority class has {m} rows; split would be degenerate")
    n_train = int(spec.train_frac * m)
    n_val = int(spec.val_frac * m)

    rng = np.random.default_rng(spec.seed)
    parts: dict[str, list[np.ndarray]] = {"train": [], "val": [], "test": []}
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        if ids is not None:
            idx = idx[np.argsort(id_array[idx], kind="stable")]
        chosen = idx[rng.permutation(idx.shape[0])][:m]
        parts["train"].append(chosen[:n_train])
        parts["val"].append(chosen[n_train:n_train + n_val])
        parts["test"].append(chosen[n_train + n_val:])

    return SplitResult(
        train_idx=np.sort(np.concatenate(parts["train"])),
        val_idx=np.sort(np.concatenate(parts["val"])),
        test_idx=np.sort(np.concatenate(parts["test"])),
    )


def yeo_johnson(x: np.ndarray, lam: float) -> np.ndarray:
    """The piecewise power transform; lambda 1 is the exact identity."""
    x = np.asarray(x, dtype=np.float64)
    if lam == 1.0:
        return x.copy()
    out = np.empty_like(x)
    pos = x >= 0
    if lam == 0.0:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = np.expm1(lam * np.log1p(x[pos])) / lam
    if lam == 2.0:
        out[~pos] = -np.log1p(-x[~pos])
    else:
        out[~pos] = -np.expm1((2.0 - lam) * np.log1p(-x[~pos])) / (2.0 - lam)
    return out


def yeo_johnson_inverse(t: np.ndarray, lam: float) -> np.ndarray:
    """Analytic inverse of :func:`yeo_johnson` for the same lambda."""
    t = np.asarray(t, dtype=np.float64)
    if lam == 1.0:
        return t.copy()
    out = np.empty_like(t)
    pos = t >= 0
    if lam == 0.0:
        out[pos] = np.expm1(t[pos])
    else:
        out[pos] = np.expm1(np.log1p(lam * t[pos]) / lam)
    if lam == 2.0:
        out[~pos] = -np.expm1(-t[~pos])
    else:
        out[~pos] = -np.expm1(np.log1p((lam - 2.0) * t[~pos]) / (2.0 - lam))
    return out


def _log_likelihood(x: np.ndarray, lam: float, sign_log_term: float) -> float:
    t = yeo_johnson(x, lam)
    var = float(np.var(t))
    if not np.isfinite(var) or var <= 0.0:
        return -np.inf
    return -0.5 * x.shape[0] * math.log(var) + (lam - 1.0) * sign_log_term


def fit_lambda(x: np.ndarray, lambda_min: float = -5.0, lambda_max: float = 5.0,
               tol: float = 1e-6, grid_size: int = 41) -> float:
    """Maximum-likelihood lambda via a coarse grid plus golden-section refine."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DataError("cannot fit a power transform to non-finite values")
    sign_log_term = float(np.sum(np.sign(x) * np.log1p(np.abs(x))))

    grid = np.linspace(lambda_min, lambda_max, grid_size)
    scores = [_log_likelihood(x, lam, sign_log_term) for lam in grid]
    k = int(np.argmax(scores))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid_size - 1)]

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _log_likelihood(x, c, sign_log_term)
    fd = _log_likelihood(x, d, sign_log_term)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _log_likelihood(x, c, sign_log_term)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _log_likelihood(x, d, sign_log_term)
    return (a + b) / 2.0


class YeoJohnsonScaler(BaseEstimator, TransformerMixin):
    """Per-feature power transform plus standardization, fitted on train only.

    Zero-variance features are flagged and pass through unchanged in both
    directions.
    """

    def __init__(self, lambda_min: float = -5.0, lambda_max: float = 5.0,
                 tol: float = 1e-6, grid_size: int = 41):
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        self.tol = tol
        self.grid_size = grid_size

    def fit(self, X, y=None) -> "YeoJohnsonScaler":
        X = check_matrix(X, name="train matrix")
        n_features = X.shape[1]
        self.lambdas_ = np.ones(n_features)
        self.means_ = np.zeros(n_features)
        self.stds_ = np.ones(n_features)
        self.zero_variance_ = np.zeros(n_features, dtype=bool)
        for j in range(n_features):
            col = X[:, j]
            if np.min(col) == np.max(col):
                self.zero_variance_[j] = True
                continue
            lam = fit_lambda(col, self.lambda_min, self.lambda_max, self.tol, self.grid_size)
            t = yeo_johnson(col, lam)
            std = float(np.std(t))
            self.lambdas_[j] = lam
            self.means_[j] = float(np.mean(t))
            self.stds_[j] = std if std > 0 else 1.0
        self.n_features_in_ = n_features
        return self

    def transform(self, X) -> np.ndarray:
        X = check_matrix(X)
        self._check_fitted(X)
        out = np.empty_like(X)
        for j in range(self.n_features_in_):
            if self.zero_variance_[j]:
                out[:, j] = X[:, j]
            else:
                out[:, j] = (yeo_johnson(X[:, j], self.lambdas_[j]) - self.means_[j]) / self.stds_[j]
        return out

    def inverse_transform(self, Z) -> np.ndarray:
        Z = check_matrix(Z)
        self._check_fitted(Z)
        out = np.empty_like(Z)
        for j in range(self.n_features_in_):
            if self.zero_variance_[j]:
                out[:, j] = Z[:, j]
            else:
                out[:, j] = yeo_johnson_inverse(Z[:, j] * self.stds_[j] + self.means_[j],
                                                self.lambdas_[j])
        return out

    def _check_fitted(self, X: np.ndarray) -> None:
        if not hasattr(self, "n_features_in_"):
            raise NotFittedError("YeoJohnsonScaler is not fitted")
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"matrix has {X.shape[1]} columns, scaler was fitted on "
                            f"{self.n_features_in_}")


def skewness(x: np.ndarray) -> float:
    """Population skewness; 0 for constant input."""
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean()
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        return 0.0
    return float(np.mean(centered ** 3)) / m2 ** 1.5


_PARAM_COLUMNS = ("feature", "lambda", "mean", "std", "zero_variance")


def write_params(scaler: YeoJohnsonScaler, feature_names: Sequence[str],
                 destination: str | Path | IO, meta: dict[str, str] | None = None) -> None:
    if len(feature_names) != scaler.n_features_in_:
        raise DataError("feature names do not match fitted scaler width")
    with open_for_write(destination) as handle:
        handle.write(meta_line("yj-params", meta or {}))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_PARAM_COLUMNS)
        for j, name in enumerate(feature_names):
            writer.writerow([name, repr(float(scaler.lambdas_[j])),
                             repr(float(scaler.means_[j])), repr(float(scaler.stds_[j])),
                             int(scaler.zero_variance_[j])])


def read_params(source: str | Path | IO) -> tuple[YeoJohnsonScaler, tuple[str, ...]]:
    with open_for_read(source) as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows, None)
        if header != list(_PARAM_COLUMNS):
            raise DataError(f"unexpected transform-params header {header!r}")
        names, lambdas, means, stds, flags = [], [], [], [], []
        for row in rows:
            names.append(row[0])
            lambdas.append(float(row[1]))
            means.append(float(row[2]))
            stds.append(float(row[3]))
            flags.append(bool(int(row[4])))
    scaler = YeoJohnsonScaler()
    scaler.lambdas_ = np.array(lambdas)
    scaler.means_ = np.array(means)
    scaler.stds_ = np.array(stds)
    scaler.zero_variance_ = np.array(flags, dtype=bool)
    scaler.n_features_in_ = len(names)
    return scaler, tuple(names)
