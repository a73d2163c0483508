"""Versioned, self-describing persistence for trained models and curves.

Artifacts are JSON with sorted keys and no wall-clock content, so a rerun
with identical configuration reproduces them byte for byte. Every artifact
embeds the tool version, a hash of the effective configuration, and (for
tabular models) the feature-ordering tag that evaluation verifies.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from ._version import __version__
from .errors import DataError
from .fileio import open_for_write
from .models import (GradientBoostingClassifier, LogisticRegressionClassifier,
                     LstmSequenceClassifier, RandomForestClassifier)
from .models.tree import TreeNodes

FORMAT = "frustra.model"
FORMAT_VERSION = 1

MODEL_KINDS = {
    "logreg": LogisticRegressionClassifier,
    "rf": RandomForestClassifier,
    "gbdt": GradientBoostingClassifier,
    "lstm": LstmSequenceClassifier,
}
_KIND_FOR_CLASS = {cls: kind for kind, cls in MODEL_KINDS.items()}


def config_hash(params: Mapping[str, object]) -> str:
    """Short stable hash of an effective-parameter mapping."""
    canonical = "\n".join(f"{key}={params[key]!r}" for key in sorted(params))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _tree_to_dict(tree: TreeNodes) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "gain": tree.gain.tolist(),
        "n_node": tree.n_node.tolist(),
    }


def _tree_from_dict(data: dict) -> TreeNodes:
    return TreeNodes(
        feature=np.array(data["feature"], dtype=np.int64),
        threshold=np.array(data["threshold"], dtype=np.float64),
        left=np.array(data["left"], dtype=np.int64),
        right=np.array(data["right"], dtype=np.int64),
        value=np.array(data["value"], dtype=np.float64),
        gain=np.array(data["gain"], dtype=np.float64),
        n_node=np.array(data["n_node"], dtype=np.int64),
    )


def _model_state(model) -> dict:
    if isinstance(model, LogisticRegressionClassifier):
        return {
            "weights": model.weights_.tolist(),
            "bias": model.bias_,
            "n_iter": model.n_iter_,
            "final_loss": model.final_loss_,
            "n_features_in": model.n_features_in_,
        }
    if isinstance(model, RandomForestClassifier):
        return {
            "trees": [_tree_to_dict(t) for t in model.trees_],
            "n_features_in": model.n_features_in_,
        }
    if isinstance(model, GradientBoostingClassifier):
        return {
            "trees": [_tree_to_dict(t) for t in model.trees_],
            "base_score": model.base_score_,
            "best_iteration": model.best_iteration_,
            "n_features_in": model.n_features_in_,
        }
    if isinstance(model, LstmSequenceClassifier):
        return {
            "params": {key: value.tolist() for key, value in model.params_.items()},
            "best_epoch": model.best_epoch_,
            "n_epochs": model.n_epochs_,
        }
    raise DataError(f"cannot serialize model of type {type(model).__name__}")


def _restore_state(model, kind: str, state: dict) -> None:
    if kind == "logreg":
        model.weights_ = np.array(state["weights"], dtype=np.float64)
        model.bias_ = float(state["bias"])
        model.n_iter_ = int(state["n_iter"])
        model.final_loss_ = float(state["final_loss"])
        model.n_features_in_ = int(state["n_features_in"])
    elif kind == "rf":
        model.trees_ = [_tree_from_dict(t) for t in state["trees"]]
        model.n_features_in_ = int(state["n_features_in"])
    elif kind == "gbdt":
        model.trees_ = [_tree_from_dict(t) for t in state["trees"]]
        model.base_score_ = float(state["base_score"])
        model.best_iteration_ = int(state["best_iteration"])
        model.n_features_in_ = int(state["n_features_in"])
    elif kind == "lstm":
        model.params_ = {key: np.array(value, dtype=np.float64)
                         for key, value in state["params"].items()}
        model.best_epoch_ = int(state["best_epoch"])
        model.n_epochs_ = int(state["n_epochs"])


def save_model(model, destination: str | Path | IO, *, config_hash_value: str,
               feature_tag: str | None = None) -> None:
    kind = _KIND_FOR_CLASS.get(type(model))
    if kind is None:
        raise DataError(f"unknown model type {type(model).__name__}")
    document = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "tool_version": __version__,
        "config_hash": config_hash_value,
        "feature_tag": feature_tag,
        "hyperparams": model.get_params(),
        "state": _model_state(model),
    }
    with open_for_write(destination) as handle:
        json.dump(document, handle, sort_keys=True, indent=1)
        handle.write("\n")


def load_model(source: str | Path | IO):
    """Rebuild a fitted model; returns (model, artifact metadata)."""
    if isinstance(source, (str, Path)):
        document = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        document = json.load(source)
    if document.get("format") != FORMAT:
        raise DataError("not a model artifact")
    if document.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported artifact version {document.get('format_version')!r}")
    kind = document["kind"]
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    model = MODEL_KINDS[kind](**document["hyperparams"])
    _restore_state(model, kind, document["state"])
    meta = {key: document.get(key) for key in ("kind", "tool_version", "config_hash",
                                               "feature_tag")}
    return model, meta


def write_curve(values: Sequence[float], destination: str | Path | IO,
                start_round: int = 1, meta: Mapping[str, str] | None = None) -> None:
    """Two-column delimited text (round, logloss) for curve plots."""
    from .fileio import meta_line

    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("curve", dict(meta)))
        handle.write("round,logloss\n")
        for i, value in enumerate(values, start_round):
            handle.write(f"{i},{value!r}\n")
