"""Single-layer LSTM classifier over symbol sequences, trained with Adam.

The recurrence runs over padded batches with a per-step validity mask, so
hidden and cell states freeze once a row's true length is exhausted; the
logit reads the hidden state of the last valid step. Loss is binary
cross-entropy computed directly from logits in the log-sum-exp form.
Backpropagation through time is implemented by hand and is checked against
finite differences in the test suite.

Rows are bucketed by length before padding, the order within each bucket
reshuffled every epoch from a seeded stream, so training is deterministic
for a fixed seed while batches still vary across epochs.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..errors import DataError, TrainingError
from ..validation import check_labels
from ._common import sigmoid

#: pad token 0 plus symbols 1..6; symbol 6 stays in the vocabulary so that
#: untruncated streams can be scored without crashing.
VOCAB_SIZE = 7

Params = dict[str, np.ndarray]

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


def init_params(embed_dim: int, hidden_dim: int, seed: int) -> Params:
    """Small uniform embeddings/projections, per-gate orthogonal recurrence,
    forget-gate bias 1."""
    rng = np.random.default_rng([seed, 0])
    H = hidden_dim
    params: Params = {
        "emb": rng.uniform(-0.1, 0.1, (VOCAB_SIZE, embed_dim)),
        "wx": rng.uniform(-0.1, 0.1, (embed_dim, 4 * H)),
        "wh": np.zeros((H, 4 * H)),
        "b": np.zeros(4 * H),
        "w_out": rng.uniform(-0.1, 0.1, H),
        "b_out": np.zeros(1),
    }
    for gate in range(4):
        a = rng.standard_normal((H, H))
        q, r = np.linalg.qr(a)
        params["wh"][:, gate * H:(gate + 1) * H] = q * np.sign(np.diag(r))
    params["b"][H:2 * H] = 1.0
    return params


def _run_recurrence(params: Params, tokens: np.ndarray, lengths: np.ndarray,
                    keep_cache: bool) -> tuple[np.ndarray, np.ndarray, list | None]:
    B, T = tokens.shape
    H = params["w_out"].shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache: list | None = [] if keep_cache else None
    for t in range(T):
        tok = tokens[:, t]
        x = params["emb"][tok]
        a = x @ params["wx"] + h @ params["wh"] + params["b"]
        gi = sigmoid(a[:, :H])
        gf = sigmoid(a[:, H:2 * H])
        gg = np.tanh(a[:, 2 * H:3 * H])
        go = sigmoid(a[:, 3 * H:])
        c_new = gf * c + gi * gg
        tanh_c = np.tanh(c_new)
        h_new = go * tanh_c
        m = (t < lengths).astype(np.float64)[:, None]
        if keep_cache:
            cache.append((tok, gi, gf, gg, go, c, tanh_c, h, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    logits = h @ params["w_out"] + params["b_out"][0]
    return logits, h, cache


def forward_logits(params: Params, tokens: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """One logit per row, read at each row's last valid step."""
    logits, _, _ = _run_recurrence(params, tokens, lengths, keep_cache=False)
    return logits


def loss_and_grads(params: Params, tokens: np.ndarray, lengths: np.ndarray,
                   y: np.ndarray) -> tuple[float, Params]:
    """Mean BCE-from-logits and exact gradients for every parameter array."""
    logits, h_final, cache = _run_recurrence(params, tokens, lengths, keep_cache=True)
    yf = y.astype(np.float64)
    losses = np.maximum(logits, 0.0) - logits * yf + np.log1p(np.exp(-np.abs(logits)))
    loss = float(np.mean(losses))

    B = tokens.shape[0]
    H = params["w_out"].shape[0]
    dz = (sigmoid(logits) - yf) / B
    grads: Params = {key: np.zeros_like(value) for key, value in params.items()}
    grads["w_out"] = h_final.T @ dz
    grads["b_out"] = np.array([float(np.sum(dz))])

    dh = dz[:, None] * params["w_out"][None, :]
    dc = np.zeros((B, H))
    for t in range(tokens.shape[1] - 1, -1, -1):
        tok, gi, gf, gg, go, c_prev, tanh_c, h_prev, m = cache[t]
        dh_new = m * dh
        dc_new = m * dc + dh_new * go * (1.0 - tanh_c ** 2)
        do = dh_new * tanh_c
        df = dc_new * c_prev
        di = dc_new * gg
        dg = dc_new * gi

        da = np.concatenate([
            di * gi * (1.0 - gi),
            df * gf * (1.0 - gf),
            dg * (1.0 - gg ** 2),
            do * go * (1.0 - go),
        ], axis=1)

        x = params["emb"][tok]
        grads["wx"] += x.T @ da
        grads["wh"] += h_prev.T @ da
        grads["b"] += da.sum(axis=0)
        np.add.at(grads["emb"], tok, da @ params["wx"].T)

        dh = (1.0 - m) * dh + da @ params["wh"].T
        dc = (1.0 - m) * dc + dc_new * gf
    return loss, grads


def _clip_global_norm(grads: Params, max_norm: float) -> None:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


class LstmSequenceClassifier(BaseEstimator):
    """Discriminative LSTM over symbol sequences with early stopping."""

    def __init__(self, embed_dim: int = 16, hidden_dim: int = 64,
                 learning_rate: float = 1e-3, batch_size: int = 256,
                 max_epochs: int = 30, patience: int = 3, seed: int = 0,
                 grad_clip: float = 5.0):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.grad_clip = grad_clip

    def fit(self, sequences: Sequence[Sequence[int]], y,
            val_sequences: Sequence[Sequence[int]] | None = None,
            y_val=None) -> "LstmSequenceClassifier":
        seqs = _check_sequences(sequences)
        y = check_labels(y, n_rows=len(seqs), require_both_classes=True)
        has_val = val_sequences is not None
        if has_val:
            val_seqs = _check_sequences(val_sequences)
            y_val = check_labels(y_val, n_rows=len(val_seqs))

        params = init_params(self.embed_dim, self.hidden_dim, self.seed)
        adam_m = {k: np.zeros_like(v) for k, v in params.items()}
        adam_v = {k: np.zeros_like(v) for k, v in params.items()}
        step = 0

        lengths = np.array([len(s) for s in seqs])
        self.train_curve_: list[float] = []
        self.val_curve_: list[float] = []
        best_val = np.inf
        best_params = None
        best_epoch = 0
        wait = 0

        for epoch in range(1, self.max_epochs + 1):
            rng = np.random.default_rng([self.seed, 1, epoch])
            loss_sum = 0.0
            for bi, rows in enumerate(_batch_order(lengths, self.batch_size, rng)):
                tokens, lens = _pad_batch(seqs, rows)
                loss, grads = loss_and_grads(params, tokens, lens, y[rows])
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
                _clip_global_norm(grads, self.grad_clip)
                step += 1
                bias1 = 1.0 - _ADAM_BETA1 ** step
                bias2 = 1.0 - _ADAM_BETA2 ** step
                for key in params:
                    g = grads[key]
                    adam_m[key] = _ADAM_BETA1 * adam_m[key] + (1.0 - _ADAM_BETA1) * g
                    adam_v[key] = _ADAM_BETA2 * adam_v[key] + (1.0 - _ADAM_BETA2) * g * g
                    params[key] -= (self.learning_rate * (adam_m[key] / bias1)
                                    / (np.sqrt(adam_v[key] / bias2) + _ADAM_EPS))
                loss_sum += loss * rows.shape[0]
            self.train_curve_.append(loss_sum / len(seqs))

            if has_val:
                val_loss = _dataset_loss(params, val_seqs, y_val, self.batch_size)
                self.val_curve_.append(val_loss)
                if val_loss < best_val:
                    best_val = val_loss
                    best_params = {k: v.copy() for k, v in params.items()}
                    best_epoch = epoch
                    wait = 0
                else:
                    wait += 1
                    if self.patience and wait >= self.patience:
                        break

        if has_val and best_params is not None:
            params = best_params
            self.best_epoch_ = best_epoch
        else:
            self.best_epoch_ = len(self.train_curve_)
        self.params_ = params
        self.n_epochs_ = len(self.train_curve_)
        return self

    def predict_proba(self, sequences: Sequence[Sequence[int]]) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("LstmSequenceClassifier is not fitted")
        seqs = _check_sequences(sequences)
        return _dataset_proba(self.params_, seqs, self.batch_size)

    def predict_proba_prefix(self, sequences: Sequence[Sequence[int]],
                             window: int) -> np.ndarray:
        """Score only each sequence's first ``window`` symbols with the same model."""
        if window < 1:
            raise DataError(f"window must be >= 1, got {window}")
        return self.predict_proba([tuple(s)[:window] for s in sequences])

    def predict(self, sequences: Sequence[Sequence[int]]) -> np.ndarray:
        return (self.predict_proba(sequences) >= 0.5).astype(np.int64)


def _check_sequences(sequences: Sequence[Sequence[int]]) -> list[np.ndarray]:
    if len(sequences) == 0:
        raise DataError("sequence collection is empty")
    out = []
    for i, seq in enumerate(sequences):
        arr = np.asarray(tuple(seq), dtype=np.int64)
        if arr.size == 0:
            raise DataError(f"sequence {i} is empty")
        if arr.min() < 1 or arr.max() >= VOCAB_SIZE:
            raise DataError(f"sequence {i} has symbols outside 1..{VOCAB_SIZE - 1}")
        out.append(arr)
    return out


def _batch_order(lengths: np.ndarray, batch_size: int,
                 rng: np.random.Generator | None) -> list[np.ndarray]:
    order = np.argsort(lengths, kind="stable")
    if rng is not None:
        sorted_lengths = lengths[order]
        start = 0
        n = order.shape[0]
        for end in range(1, n + 1):
            if end == n or sorted_lengths[end] != sorted_lengths[start]:
                if end - start > 1:
                    segment = order[start:end]
                    order[start:end] = segment[rng.permutation(end - start)]
                start = end
    return [order[i:i + batch_size] for i in range(0, order.shape[0], batch_size)]


def _pad_batch(seqs: list[np.ndarray], rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lens = np.array([seqs[r].shape[0] for r in rows])
    tokens = np.zeros((rows.shape[0], int(lens.max())), dtype=np.int64)
    for bi, r in enumerate(rows):
        tokens[bi, :seqs[r].shape[0]] = seqs[r]
    return tokens, lens


def _dataset_proba(params: Params, seqs: list[np.ndarray], batch_size: int) -> np.ndarray:
    lengths = np.array([s.shape[0] for s in seqs])
    probs = np.empty(len(seqs))
    for rows in _batch_order(lengths, batch_size, rng=None):
        tokens, lens = _pad_batch(seqs, rows)
        probs[rows] = sigmoid(forward_logits(params, tokens, lens))
    return probs


def _dataset_loss(params: Params, seqs: list[np.ndarray], y: np.ndarray,
                  batch_size: int) -> float:
    lengths = np.array([s.shape[0] for s in seqs])
    total = 0.0
    for rows in _batch_order(lengths, batch_size, rng=None):
        tokens, lens = _pad_batch(seqs, rows)
        logits = forward_logits(params, tokens, lens)
        yf = y[rows].astype(np.float64)
        total += float(np.sum(np.maximum(logits, 0.0) - logits * yf
                              + np.log1p(np.exp(-np.abs(logits)))))
    return total / len(seqs)
