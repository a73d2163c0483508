"""Flat-array decision trees with exact sorted split search.

Two builders share the representation: a Gini/CART builder for forests and
a second-order (gradient/hessian) builder for boosting. Split search sorts
each candidate feature and sweeps boundaries between distinct values, so
every accepted threshold lies strictly between two observed values. Ties
are broken toward the lowest feature index, then the lowest threshold, by
scanning features in ascending order and requiring strict improvement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LEAF = -1


@dataclass
class TreeNodes:
    """One tree as parallel node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    n_node: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != _LEAF:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf value per row; rows with x <= threshold go left."""
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = np.nonzero(self.feature[idx] != _LEAF)[0]
            if active.size == 0:
                return self.value[idx]
            nodes = idx[active]
            go_left = X[active, self.feature[nodes]] <= self.threshold[nodes]
            idx[active] = np.where(go_left, self.left[nodes], self.right[nodes])


class _TreeBuilder:
    """Accumulates nodes in preorder, patching parent links as it goes."""

    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []
        self.n_node: list[int] = []

    def add(self, value: float, n: int) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(value)
        self.gain.append(0.0)
        self.n_node.append(n)
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float, gain: float) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.gain[node] = gain

    def finish(self) -> TreeNodes:
        return TreeNodes(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
            gain=np.array(self.gain, dtype=np.float64),
            n_node=np.array(self.n_node, dtype=np.int64),
        )


def _candidate_boundaries(xs: np.ndarray, min_leaf: int) -> np.ndarray:
    """Positions i where a split between xs[i] and xs[i+1] is admissible."""
    bounds = np.nonzero(xs[1:] > xs[:-1])[0]
    if min_leaf > 1 and bounds.size:
        n = xs.shape[0]
        keep = (bounds + 1 >= min_leaf) & (n - bounds - 1 >= min_leaf)
        bounds = bounds[keep]
    return bounds


def _gini(pos: float, n: float) -> float:
    p = pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def build_gini_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
                    features_per_split: int, max_depth: int | None,
                    min_leaf: int = 1) -> TreeNodes:
    """CART with Gini impurity and uniform feature subsampling per split.

    Leaf values are positive-class fractions. Recorded gain is the
    sample-weighted impurity decrease, normalized by the root size.
    """
    n_rows, n_features = X.shape
    k = min(features_per_split, n_features)
    depth_cap = np.inf if max_depth is None else max_depth
    builder = _TreeBuilder()
    root_n = float(n_rows)

    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n_rows), 0, _LEAF, False)]
    while stack:
        indices, depth, parent, is_left = stack.pop()
        y_node = y[indices]
        n = indices.shape[0]
        pos = float(y_node.sum())
        node = builder.add(pos / n, n)
        if parent != _LEAF:
            if is_left:
                builder.left[parent] = node
            else:
                builder.right[parent] = node

        if depth >= depth_cap or pos == 0.0 or pos == n or n < 2 * min_leaf:
            continue

        chosen = np.sort(rng.choice(n_features, size=k, replace=False))
        parent_imp = _gini(pos, n)
        best_gain = 0.0
        best: tuple[int, float] | None = None
        for f in chosen:
            x = X[indices, f]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            bounds = _candidate_boundaries(xs, min_leaf)
            if bounds.size == 0:
                continue
            cum_pos = np.cumsum(y_node[order])
            n_left = bounds + 1.0
            pos_left = cum_pos[bounds].astype(np.float64)
            n_right = n - n_left
            pos_right = pos - pos_left
            p_l = pos_left / n_left
            p_r = pos_right / n_right
            weighted = (n_left * (1.0 - p_l * p_l - (1.0 - p_l) ** 2)
                        + n_right * (1.0 - p_r * p_r - (1.0 - p_r) ** 2)) / n
            gains = parent_imp - weighted
            best_pos = int(np.argmax(gains))
            if gains[best_pos] > best_gain:
                best_gain = float(gains[best_pos])
                b = bounds[best_pos]
                best = (int(f), float((xs[b] + xs[b + 1]) / 2.0))
        if best is None:
            continue

        feature, threshold = best
        builder.make_split(node, feature, threshold, best_gain * n / root_n)
        left_mask = X[indices, feature] <= threshold
        stack.append((indices[~left_mask], depth + 1, node, False))
        stack.append((indices[left_mask], depth + 1, node, True))
    return builder.finish()


def build_newton_tree(X: np.ndarray, grad: np.ndarray, hess: np.ndarray,
                      reg_lambda: float, max_depth: int, min_leaf: int = 1) -> TreeNodes:
    """Regression tree on gradient/hessian statistics.

    Leaf value is the regularized Newton step -G / (H + lambda); split gain
    is half the score improvement of the children over the parent.
    """
    n_rows = X.shape[0]
    builder = _TreeBuilder()

    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n_rows), 0, _LEAF, False)]
    while stack:
        indices, depth, parent, is_left = stack.pop()
        g_node = grad[indices]
        h_node = hess[indices]
        g_total = float(g_node.sum())
        h_total = float(h_node.sum())
        n = indices.shape[0]
        node = builder.add(-g_total / (h_total + reg_lambda), n)
        if parent != _LEAF:
            if is_left:
                builder.left[parent] = node
            else:
                builder.right[parent] = node

        if depth >= max_depth or n < 2 * min_leaf:
            continue

        parent_score = g_total * g_total / (h_total + reg_lambda)
        best_gain = 0.0
        best: tuple[int, float] | None = None
        for f in range(X.shape[1]):
            x = X[indices, f]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            bounds = _candidate_boundaries(xs, min_leaf)
            if bounds.size == 0:
                continue
            cum_g = np.cumsum(g_node[order])
            cum_h = np.cumsum(h_node[order])
            g_left = cum_g[bounds]
            h_left = cum_h[bounds]
            g_right = g_total - g_left
            h_right = h_total - h_left
            gains = 0.5 * (g_left ** 2 / (h_left + reg_lambda)
                           + g_right ** 2 / (h_right + reg_lambda) - parent_score)
            best_pos = int(np.argmax(gains))
            if gains[best_pos] > best_gain:
                best_gain = float(gains[best_pos])
                b = bounds[best_pos]
                best = (int(f), float((xs[b] + xs[b + 1]) / 2.0))
        if best is None:
            continue

        feature, threshold = best
        builder.make_split(node, feature, threshold, best_gain)
        left_mask = X[indices, feature] <= threshold
        stack.append((indices[~left_mask], depth + 1, node, False))
        stack.append((indices[left_mask], depth + 1, node, True))
    return builder.finish()
