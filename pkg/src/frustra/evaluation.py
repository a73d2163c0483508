"""Model-level evaluation: early-window sweeps and feature importances."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .errors import DataError
from .fileio import meta_line, open_for_write
from .metrics import MetricsReport, evaluate_scores
from .validation import check_labels, check_matrix

DEFAULT_WINDOWS = (5, 10, 15, 20, 30)


@dataclass(frozen=True, slots=True)
class EarlyWindowResult:
    window: int
    metrics: MetricsReport


def early_window_sweep(model, sequences: Sequence[Sequence[int]], y: Sequence[int],
                       windows: Sequence[int] = DEFAULT_WINDOWS) -> list[EarlyWindowResult]:
    """Score every sequence from only its first N symbols, for each window N.

    Uses the already-trained model; a window at least as long as every
    sequence reproduces full-sequence metrics exactly.
    """
    results = []
    for window in windows:
        if window <= 0:
            raise DataError(f"window must be positive, got {window}")
        probs = model.predict_proba_prefix(sequences, window)
        results.append(EarlyWindowResult(window=int(window), metrics=evaluate_scores(y, probs)))
    return results


def permutation_importance(model, X, y, seed: int = 0, repeats: int = 5) -> np.ndarray:
    """Mean accuracy drop per feature when that column is shuffled.

    Each (feature, repeat) pair draws from its own seeded stream; the
    identity permutation is redrawn whenever there is more than one row.
    """
    X = check_matrix(X)
    y = check_labels(y, n_rows=X.shape[0])
    if repeats < 1:
        raise DataError(f"repeats must be >= 1, got {repeats}")
    baseline = float(np.mean(model.predict(X) == y))
    n = X.shape[0]
    drops = np.zeros(X.shape[1])
    work = X.copy()
    for j in range(X.shape[1]):
        original = X[:, j].copy()
        total = 0.0
        for r in range(repeats):
            rng = np.random.default_rng([seed, j, r])
            perm = rng.permutation(n)
            while n > 1 and np.array_equal(perm, np.arange(n)):
                perm = rng.permutation(n)
            work[:, j] = original[perm]
            total += float(np.mean(model.predict(work) == y))
        work[:, j] = original
        drops[j] = baseline - total / repeats
    return drops


def gain_importance(model) -> np.ndarray:
    """Total split gain per feature across a tree ensemble, normalized to sum 1.

    For boosted models only the stages up to the best iteration count.
    """
    trees = getattr(model, "trees_", None)
    if trees is None:
        raise DataError("gain importance requires a tree-based model")
    best = getattr(model, "best_iteration_", None)
    if best is not None:
        trees = trees[:best]
    if len(trees) == 0:
        raise DataError("model has no trees")
    totals = np.zeros(model.n_features_in_)
    for tree in trees:
        internal = tree.feature >= 0
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    total = totals.sum()
    if total <= 0:
        raise DataError("model has no splits to attribute gain to")
    return totals / total


_EARLY_WINDOW_COLUMNS = ("window", "accuracy", "positive_f1", "macro_f1", "roc_auc",
                         "precision_0", "recall_0", "f1_0",
                         "precision_1", "recall_1", "f1_1")


def write_early_window_results(results: Sequence[EarlyWindowResult],
                               destination: str | Path | IO,
                               meta: dict[str, str] | None = None) -> None:
    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("early-window", meta))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_EARLY_WINDOW_COLUMNS)
        for item in results:
            m = item.metrics
            writer.writerow([item.window, repr(m.accuracy), repr(m.positive_f1),
                             repr(m.macro_f1), repr(m.roc_auc),
                             repr(m.per_class[0].precision), repr(m.per_class[0].recall),
                             repr(m.per_class[0].f1),
                             repr(m.per_class[1].precision), repr(m.per_class[1].recall),
                             repr(m.per_class[1].f1)])


def format_early_window_results(results: Sequence[EarlyWindowResult]) -> str:
    lines = [f"{'Window':>8}{'Accuracy':>10}{'F1 (pos)':>10}{'ROC AUC':>10}"]
    for item in results:
        m = item.metrics
        lines.append(f"{item.window:>8}{m.accuracy:>10.4f}{m.positive_f1:>10.4f}"
                     f"{m.roc_auc:>10.4f}")
    return "\n".join(lines) + "\n"
