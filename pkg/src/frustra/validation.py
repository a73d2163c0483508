"""Input validation helpers for the estimator-style public APIs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DataError


def check_matrix(X, *, name: str = "X", require_finite: bool = True) -> np.ndarray:
    """Coerce ``X`` to a 2-D float64 array, rejecting bad shapes and non-finite values."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise DataError(f"{name} must contain at least one row")
    if require_finite and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def check_labels(y, *, n_rows: int | None = None, require_both_classes: bool = False) -> np.ndarray:
    """Coerce ``y`` to an int64 vector of 0/1 labels."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DataError(f"labels must be 1-dimensional, got ndim={arr.ndim}")
    values = np.unique(arr)
    if not np.all(np.isin(values, (0, 1))):
        raise DataError(f"labels must be binary 0/1, got values {values!r}")
    if n_rows is not None and arr.shape[0] != n_rows:
        raise DataError(f"labels length {arr.shape[0]} does not match {n_rows} rows")
    if require_both_classes and values.size < 2:
        raise DataError("both classes must be present")
    return arr.astype(np.int64)


def check_n_features(X: np.ndarray, expected: int, *, name: str = "X") -> None:
    if X.shape[1] != expected:
        raise DataError(f"{name} has {X.shape[1]} features, expected {expected}")


def check_symbol_sequence(symbols: Sequence[int], *, alphabet: tuple[int, ...],
                          min_length: int = 1, name: str = "symbols") -> tuple[int, ...]:
    """Validate a symbol sequence against an alphabet and a minimum length."""
    seq = tuple(int(s) for s in symbols)
    if len(seq) < min_length:
        raise DataError(f"{name} must have length >= {min_length}, got {len(seq)}")
    allowed = set(alphabet)
    for s in seq:
        if s not in allowed:
            raise DataError(f"{name} contains symbol {s} outside alphabet {sorted(allowed)}")
    return seq
