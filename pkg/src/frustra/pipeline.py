"""End-to-end batch pipeline: ingest through evaluation.

Stages run sequentially, each persisting its output before the next
starts. All randomness flows from the single configured seed, artifacts
never contain wall-clock content, and writers are atomic, so a rerun with
an identical configuration reproduces every output byte for byte. A failed
stage leaves its in-progress file behind with a ``.partial`` suffix and
halts with the stage name attached to the cause.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .artifacts import config_hash, save_model, write_curve
from .errors import ConfigError, DataError, FrustraError
from .evaluation import DEFAULT_WINDOWS, early_window_sweep, write_early_window_results
from .features import (FeatureMatrix, build_matrix, feature_tag, tag_for_names,
                       write_matrix)
from .fileio import open_for_write, read_key_value_file
from .ingest import parse_events, read_schema, validate_corpus, write_events
from .labeling import RuleConfig, label_sessions, write_labeled
from .metrics import evaluate_scores, write_report
from .models import (GradientBoostingClassifier, LogisticRegressionClassifier,
                     LstmSequenceClassifier, RandomForestClassifier)
from .sessions import sessionize, write_sessions
from .transform import SplitSpec, YeoJohnsonScaler, balanced_split, write_params

logger = logging.getLogger("frustra")

MODEL_FAMILIES = ("logreg", "rf", "gbdt", "lstm")

_MODEL_PARAM_TYPES: dict[str, dict[str, type]] = {
    "logreg": {"l2": float, "max_iters": int, "tol": float},
    "rf": {"n_trees": int, "features_per_split": int, "max_depth": int, "min_leaf": int},
    "gbdt": {"rounds": int, "learning_rate": float, "max_depth": int,
             "reg_lambda": float, "early_stop": int, "min_leaf": int},
    "lstm": {"embed_dim": int, "hidden_dim": int, "learning_rate": float,
             "batch_size": int, "max_epochs": int, "patience": int, "grad_clip": float},
}


@dataclass
class PipelineConfig:
    """Effective configuration for a full pipeline run."""

    events: str
    out_dir: str
    seed: int = 0
    threads: int = 0
    delimiter: str = ","
    schema: str | None = None
    timezone_offset_minutes: int = 0
    rules: RuleConfig = field(default_factory=RuleConfig)
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    model_family: str = "gbdt"
    model_params: dict = field(default_factory=dict)
    eval_windows: tuple[int, ...] = DEFAULT_WINDOWS

    def __post_init__(self) -> None:
        if self.model_family not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family {self.model_family!r}")
        allowed = _MODEL_PARAM_TYPES[self.model_family]
        unknown = set(self.model_params) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown {self.model_family} parameters: {sorted(unknown)}")
        if not Path(self.events).exists():
            raise ConfigError(f"events input does not exist: {self.events}")
        if self.schema is not None and not Path(self.schema).exists():
            raise ConfigError(f"schema file does not exist: {self.schema}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        raw = read_key_value_file(path)
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "PipelineConfig":
        plain: dict = {}
        rule_overrides: dict[str, int] = {}
        model_params: dict = {}
        for key, value in raw.items():
            if key.startswith("rules."):
                try:
                    rule_overrides[key[len("rules."):]] = int(value)
                except ValueError:
                    raise ConfigError(f"rule threshold {key!r} must be an integer") from None
            elif key.startswith("model."):
                name = key[len("model."):]
                if name == "family":
                    plain["model_family"] = value
                else:
                    model_params[name] = value
            elif key.startswith("split."):
                name = key[len("split."):]
                if name not in ("train_frac", "val_frac", "test_frac"):
                    raise ConfigError(f"unknown split key {key!r}")
                plain[name] = float(value)
            elif key == "eval.windows":
                plain["eval_windows"] = tuple(int(w) for w in value.split(","))
            elif key in ("seed", "threads", "timezone_offset_minutes"):
                plain[key] = int(value)
            elif key in ("events", "out_dir", "delimiter"):
                plain[key] = value
            elif key == "schema":
                plain[key] = value
            else:
                raise ConfigError(f"unknown pipeline config key {key!r}")
        for required in ("events", "out_dir"):
            if required not in plain:
                raise ConfigError(f"pipeline config is missing {required!r}")
        if "seed" not in plain:
            raise ConfigError("pipeline config is missing 'seed'")

        family = plain.get("model_family", "gbdt")
        if family not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family {family!r}")
        plain["model_params"] = _coerce_model_params(family, model_params)
        if rule_overrides:
            from .labeling import with_rule_overrides

            plain["rules"] = with_rule_overrides(RuleConfig(), rule_overrides)
        return cls(**plain)

    def flat(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "rules":
                for rf in fields(RuleConfig):
                    out[f"rules.{rf.name}"] = getattr(value, rf.name)
            elif f.name == "model_params":
                for k, v in sorted(value.items()):
                    out[f"model.{k}"] = v
            elif f.name == "eval_windows":
                out["eval.windows"] = ",".join(str(w) for w in value)
            else:
                out[f.name] = value
        return out

    @property
    def config_hash(self) -> str:
        return config_hash(self.flat())


def _coerce_model_params(family: str, raw: dict[str, str]) -> dict:
    allowed = _MODEL_PARAM_TYPES[family]
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {family} parameters: {sorted(unknown)}")
    coerced: dict = {}
    for key, value in raw.items():
        try:
            coerced[key] = allowed[key](value)
        except ValueError:
            raise ConfigError(f"parameter {key!r} must be {allowed[key].__name__}, "
                              f"got {value!r}") from None
    return coerced


def build_model(family: str, params: dict, seed: int, threads: int = 0):
    params = _coerce_model_params(family, {k: str(v) for k, v in params.items()})
    if family == "logreg":
        return LogisticRegressionClassifier(**params)
    if family == "rf":
        jobs = threads if threads and threads > 0 else (os.cpu_count() or 1)
        return RandomForestClassifier(seed=seed, n_jobs=jobs, **params)
    if family == "gbdt":
        return GradientBoostingClassifier(**params)
    if family == "lstm":
        return LstmSequenceClassifier(seed=seed, **params)
    raise ConfigError(f"unknown model family {family!r}")


class _Stage:
    """Context manager that logs timing and tags failures with the stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        logger.info("stage %s: start", self.name)
        self._t0 = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None:
            logger.info("stage %s: done in %.2fs", self.name, time.monotonic() - self._t0)
            return False
        if isinstance(exc, FrustraError) and not str(exc).startswith("stage "):
            raise type(exc)(f"stage {self.name}: {exc}") from exc
        return False


def run_pipeline(config: PipelineConfig) -> dict[str, Path]:
    """Execute every stage, persisting each intermediate under ``out_dir``."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash
    meta = {"config_hash": chash, "tool_version": _tool_version()}
    paths: dict[str, Path] = {}

    with _Stage("ingest"):
        schema = read_schema(config.schema) if config.schema else None
        events, stats = parse_events(config.events, schema, config.delimiter)
        if not events:
            raise DataError("no events survived parsing")
        paths["events"] = out_dir / "events.csv"
        write_events(events, paths["events"])
        summary = validate_corpus(events)
        paths["ingest_stats"] = out_dir / "ingest_stats.json"
        with open_for_write(paths["ingest_stats"]) as handle:
            json.dump({"parse": stats.as_dict(), "corpus": {
                "total_events": summary.total_events,
                "distinct_sessions": summary.distinct_sessions,
                "timestamp_min_ms": summary.timestamp_min_ms,
                "timestamp_max_ms": summary.timestamp_max_ms,
                "action_histogram": summary.action_histogram,
            }, "meta": meta}, handle, sort_keys=True, indent=1)
            handle.write("\n")

    with _Stage("sessionize"):
        sessions = sessionize(events)
        paths["sessions"] = out_dir / "sessions.csv"
        write_sessions(sessions, paths["sessions"], meta)

    with _Stage("label"):
        labeled, filter_stats = label_sessions(sessions, config.rules)
        if not labeled:
            raise DataError("no sessions survived labeling filters")
        paths["labeled"] = out_dir / "labeled.csv"
        write_labeled(labeled, paths["labeled"], meta)
        paths["filter_stats"] = out_dir / "filter_stats.json"
        with open_for_write(paths["filter_stats"]) as handle:
            json.dump({"filter": filter_stats.as_dict(), "meta": meta},
                      handle, sort_keys=True, indent=1)
            handle.write("\n")

    with _Stage("featurize"):
        matrix = build_matrix(labeled, config.timezone_offset_minutes)
        paths["features"] = out_dir / "features.csv"
        write_matrix(matrix, paths["features"], meta)

    with _Stage("split"):
        spec = SplitSpec(config.train_frac, config.val_frac, config.test_frac, config.seed)
        split = balanced_split(matrix.labels, spec, ids=matrix.session_ids)
        split_dir = out_dir / "splits"
        for name, idx in (("train", split.train_idx), ("val", split.val_idx),
                          ("test", split.test_idx)):
            paths[f"split_{name}"] = split_dir / f"{name}.csv"
            write_matrix(matrix.select(idx), paths[f"split_{name}"], meta)

    with _Stage("transform"):
        scaler = YeoJohnsonScaler().fit(matrix.X[split.train_idx])
        paths["yj_params"] = out_dir / "yj_params.csv"
        write_params(scaler, matrix.feature_names, paths["yj_params"], meta)
        transformed_dir = out_dir / "transformed"
        transformed = {}
        for name, idx in (("train", split.train_idx), ("val", split.val_idx),
                          ("test", split.test_idx)):
            part = matrix.select(idx)
            part = FeatureMatrix(session_ids=part.session_ids, labels=part.labels,
                                 X=scaler.transform(part.X),
                                 feature_names=part.feature_names)
            transformed[name] = part
            paths[f"transformed_{name}"] = transformed_dir / f"{name}.csv"
            write_matrix(part, paths[f"transformed_{name}"], meta)

    with _Stage("train"):
        model = build_model(config.model_family, config.model_params,
                            config.seed, config.threads)
        if config.model_family == "lstm":
            by_id = {item.session_id: item for item in labeled}
            seq_splits = {
                name: ([by_id[sid].truncated_symbols for sid in part.session_ids],
                       part.labels)
                for name, part in transformed.items()
            }
            model.fit(seq_splits["train"][0], seq_splits["train"][1],
                      seq_splits["val"][0], seq_splits["val"][1])
        else:
            model.fit(transformed["train"].X, transformed["train"].labels,
                      transformed["val"].X, transformed["val"].labels)
        paths["model"] = out_dir / "model.json"
        save_model(model, paths["model"], config_hash_value=chash,
                   feature_tag=None if config.model_family == "lstm" else feature_tag())
        for curve_name, values, start in (("train_curve", model.train_curve_, _curve_start(model)),
                                          ("val_curve", model.val_curve_, _curve_start(model))):
            if values:
                paths[curve_name] = out_dir / f"{curve_name}.csv"
                write_curve(values, paths[curve_name], start, meta)

    with _Stage("eval"):
        if config.model_family == "lstm":
            test_sequences, test_labels = seq_splits["test"]
            probs = model.predict_proba(test_sequences)
            report = evaluate_scores(test_labels, probs)
            results = early_window_sweep(model, test_sequences, test_labels,
                                         config.eval_windows)
            paths["early_window"] = out_dir / "early_window.csv"
            write_early_window_results(results, paths["early_window"], meta)
        else:
            probs = model.predict_proba(transformed["test"].X)
            report = evaluate_scores(transformed["test"].labels, probs)
        paths["report"] = out_dir / "report.txt"
        write_report(report, paths["report"], meta,
                     title=f"{config.model_family} test-set evaluation")

    return paths


def _curve_start(model) -> int:
    return 0 if isinstance(model, LogisticRegressionClassifier) else 1


def _tool_version() -> str:
    from ._version import __version__

    return __version__


def check_feature_tag(artifact_meta: dict, names) -> None:
    """Refuse evaluation when the artifact's feature ordering differs from the data's."""
    expected = artifact_meta.get("feature_tag")
    if expected is not None and expected != tag_for_names(tuple(names)):
        raise DataError("artifact feature ordering does not match the data "
                        f"(artifact tag {expected!r})")


__all__ = [
    "PipelineConfig", "run_pipeline", "build_model", "check_feature_tag",
    "MODEL_FAMILIES",
]
