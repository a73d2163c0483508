"""Clickstream frustration pipeline.

Converts raw e-commerce clickstream logs into rule-labeled sessions,
extracts sequence-derived tabular features, trains tabular and sequence
classifiers from scratch, and measures how early in a session reliable
prediction becomes possible.
"""

from ._version import __version__
from .errors import ConfigError, DataError, FrustraError, TrainingError
from .features import (FEATURE_NAMES, FeatureMatrix, SessionFeaturizer, build_matrix,
                       featurize)
from .ingest import RawEvent, parse_events, validate_corpus
from .labeling import (FrustrationSignals, LabeledSession, RuleConfig,
                       label_and_truncate, label_sessions, preprocess_filter)
from .metrics import MetricsReport, classification_report, evaluate_scores, roc_auc
from .models import (GradientBoostingClassifier, LogisticRegressionClassifier,
                     LstmSequenceClassifier, RandomForestClassifier)
from .pipeline import PipelineConfig, run_pipeline
from .sessions import Session, sessionize, symbolize
from .evaluation import early_window_sweep, gain_importance, permutation_importance
from .synth import ArchetypeSpec, default_mix, generate
from .transform import SplitSpec, YeoJohnsonScaler, balanced_split

__all__ = [
    "__version__",
    "ConfigError", "DataError", "FrustraError", "TrainingError",
    "RawEvent", "parse_events", "validate_corpus",
    "Session", "sessionize", "symbolize",
    "RuleConfig", "FrustrationSignals", "LabeledSession",
    "label_and_truncate", "label_sessions", "preprocess_filter",
    "FEATURE_NAMES", "FeatureMatrix", "SessionFeaturizer", "featurize", "build_matrix",
    "SplitSpec", "balanced_split", "YeoJohnsonScaler",
    "LogisticRegressionClassifier", "RandomForestClassifier",
    "GradientBoostingClassifier", "LstmSequenceClassifier",
    "MetricsReport", "classification_report", "evaluate_scores", "roc_auc",
    "early_window_sweep", "permutation_importance", "gain_importance",
    "ArchetypeSpec", "default_mix", "generate",
    "PipelineConfig", "run_pipeline",
]
