"""Fixed-length feature extraction from truncated symbol sequences.

Blocks, in canonical order:

* 5 unigram probabilities over the truncated alphabet;
* 25 bigram probabilities over adjacent symbol pairs;
* 6 visibility-motif probabilities for sliding windows of four points;
* motif entropy in nats;
* 4 cyclical encodings (hour of day, day of week) of the session start.

The motif of a window (x0, x1, x2, x3) is the horizontal-visibility
structure of the four points: two points see each other when everything
between them is strictly lower than both. Consecutive points always see
each other, so a window is classified by which of the three long-range
edges exist. Mutually exclusive constraints leave exactly six classes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from hashlib import sha256
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DataError
from .fileio import meta_line, open_for_read, open_for_write, parse_meta_line
from .labeling import LabeledSession
from .sessions import TRUNCATED_ALPHABET
from .validation import check_symbol_sequence

UNIGRAM_NAMES = ("p_view", "p_detail", "p_click", "p_add", "p_remove")
BIGRAM_NAMES = tuple(f"p_{a}{b}" for a in TRUNCATED_ALPHABET for b in TRUNCATED_ALPHABET)
MOTIF_NAMES = ("z1", "z2", "z3", "z4", "z5", "z6")
ENTROPY_NAME = "hz"
CYCLICAL_NAMES = ("hour_sin", "hour_cos", "dow_sin", "dow_cos")

FEATURE_NAMES: tuple[str, ...] = (
    UNIGRAM_NAMES + BIGRAM_NAMES + MOTIF_NAMES + (ENTROPY_NAME,) + CYCLICAL_NAMES
)
N_FEATURES = len(FEATURE_NAMES)

#: Edge signature -> motif class. Keys are (edge02, edge13, edge03).
_MOTIF_CLASS = {
    (False, False, False): 1,
    (True, False, False): 2,
    (False, True, False): 3,
    (True, False, True): 4,
    (False, True, True): 5,
    (False, False, True): 6,
}


def tag_for_names(names: Sequence[str]) -> str:
    """Short hash of a feature ordering, used to detect artifact mismatches."""
    return sha256(",".join(names).encode()).hexdigest()[:12]


def feature_tag() -> str:
    """Tag of the canonical feature ordering, embedded in artifacts."""
    return tag_for_names(FEATURE_NAMES)


def unigram_features(symbols: Sequence[int]) -> np.ndarray:
    """Per-symbol occurrence frequencies, normalized by sequence length."""
    seq = check_symbol_sequence(symbols, alphabet=TRUNCATED_ALPHABET, min_length=1)
    counts = np.zeros(len(TRUNCATED_ALPHABET), dtype=np.int64)
    for s in seq:
        counts[s - 1] += 1
    return counts / len(seq)


def bigram_features(symbols: Sequence[int]) -> np.ndarray:
    """Adjacent-pair frequencies, normalized by the number of pairs."""
    seq = check_symbol_sequence(symbols, alphabet=TRUNCATED_ALPHABET, min_length=2)
    counts = np.zeros(25, dtype=np.int64)
    for a, b in zip(seq, seq[1:]):
        counts[(a - 1) * 5 + (b - 1)] += 1
    return counts / (len(seq) - 1)


def classify_motif(window: Sequence[float]) -> int:
    """Motif class (1..6) of four consecutive values.

    Long-range visibility edges on the window; ties block visibility:
    0-2 exists iff x1 < min(x0, x2); 1-3 iff x2 < min(x1, x3);
    0-3 iff both middle points are below min(x0, x3).
    """
    if len(window) != 4:
        raise DataError(f"motif window must have 4 values, got {len(window)}")
    x0, x1, x2, x3 = window
    e02 = x1 < min(x0, x2)
    e13 = x2 < min(x1, x3)
    e03 = x1 < min(x0, x3) and x2 < min(x0, x3)
    return _MOTIF_CLASS[(e02, e13, e03)]


def motif_profile(symbols: Sequence[float]) -> tuple[np.ndarray, float]:
    """Motif class probabilities and their Shannon entropy (nats).

    Slides a width-4 window with stride 1; sequences shorter than 4 get an
    all-zero profile and zero entropy by convention.
    """
    n = len(symbols)
    if n < 4:
        return np.zeros(6), 0.0
    counts = np.zeros(6, dtype=np.int64)
    for i in range(n - 3):
        counts[classify_motif(symbols[i:i + 4]) - 1] += 1
    profile = counts / (n - 3)
    entropy = -sum(p * math.log(p) for p in profile if p > 0)
    return profile, entropy


def cyclical_features(first_event_ms: int, timezone_offset_minutes: int = 0) -> np.ndarray:
    """Unit-circle encoding of local hour-of-day and day-of-week (Monday=0)."""
    if first_event_ms <= 0:
        raise DataError(f"invalid epoch timestamp {first_event_ms!r}")
    moment = (datetime.fromtimestamp(first_event_ms // 1000, tz=timezone.utc)
              + timedelta(minutes=timezone_offset_minutes))
    hour, dow = moment.hour, moment.weekday()
    return np.array([
        math.sin(2 * math.pi * hour / 24),
        math.cos(2 * math.pi * hour / 24),
        math.sin(2 * math.pi * dow / 7),
        math.cos(2 * math.pi * dow / 7),
    ])


def featurize(labeled: LabeledSession, timezone_offset_minutes: int = 0) -> np.ndarray:
    """Concatenate all feature blocks for one truncated session."""
    symbols = labeled.truncated_symbols
    profile, entropy = motif_profile(symbols)
    return np.concatenate([
        unigram_features(symbols),
        bigram_features(symbols),
        profile,
        [entropy],
        cyclical_features(labeled.first_event_ms, timezone_offset_minutes),
    ])


class SessionFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer from labeled sessions to the feature matrix."""

    def __init__(self, timezone_offset_minutes: int = 0):
        self.timezone_offset_minutes = timezone_offset_minutes

    def fit(self, X: Sequence[LabeledSession], y=None) -> "SessionFeaturizer":
        return self

    def transform(self, X: Sequence[LabeledSession]) -> np.ndarray:
        return np.array([featurize(item, self.timezone_offset_minutes) for item in X])

    def get_feature_names_out(self, input_features=None) -> list[str]:
        return list(FEATURE_NAMES)


@dataclass
class FeatureMatrix:
    """A feature matrix with its row identities and labels."""

    session_ids: list[str]
    labels: np.ndarray
    X: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    meta: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if not (len(self.session_ids) == len(self.labels) == self.X.shape[0]):
            raise DataError("feature matrix rows, labels, and ids must align")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError(f"matrix has {self.X.shape[1]} columns for "
                            f"{len(self.feature_names)} feature names")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def select(self, indices: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            session_ids=[self.session_ids[i] for i in indices],
            labels=self.labels[indices],
            X=self.X[indices],
            feature_names=self.feature_names,
            meta=self.meta,
        )


def build_matrix(labeled: Sequence[LabeledSession],
                 timezone_offset_minutes: int = 0) -> FeatureMatrix:
    featurizer = SessionFeaturizer(timezone_offset_minutes)
    return FeatureMatrix(
        session_ids=[item.session_id for item in labeled],
        labels=np.array([item.label for item in labeled], dtype=np.int64),
        X=featurizer.transform(labeled),
    )


def write_matrix(matrix: FeatureMatrix, destination: str | Path | IO,
                 meta: dict[str, str] | None = None) -> None:
    merged = {"feature_tag": feature_tag(), **(meta or {})}
    with open_for_write(destination) as handle:
        handle.write(meta_line("features", merged))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("session_id", "label") + tuple(matrix.feature_names))
        for sid, label, row in zip(matrix.session_ids, matrix.labels, matrix.X):
            writer.writerow([sid, int(label)] + [repr(float(v)) for v in row])


def read_matrix(source: str | Path | IO) -> FeatureMatrix:
    with open_for_read(source) as handle:
        meta: dict[str, str] = {}
        first = handle.readline()
        if first.startswith("#"):
            meta = parse_meta_line(first)
            header_line = handle.readline()
        else:
            header_line = first
        header = next(csv.reader([header_line]), None)
        if not header or header[:2] != ["session_id", "label"]:
            raise DataError(f"unexpected feature-matrix header {header!r}")
        names = tuple(header[2:])
        ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for row in csv.reader(handle):
            if len(row) != 2 + len(names):
                raise DataError(f"bad feature row of width {len(row)}")
            ids.append(row[0])
            labels.append(int(row[1]))
            rows.append([float(v) for v in row[2:]])
    return FeatureMatrix(
        session_ids=ids,
        labels=np.array(labels, dtype=np.int64),
        X=np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names))),
        feature_names=names,
        meta=meta or None,
    )


def iter_feature_blocks() -> Iterable[tuple[str, tuple[str, ...]]]:
    """Named blocks in canonical order, for report formatting."""
    yield "unigram", UNIGRAM_NAMES
    yield "bigram", BIGRAM_NAMES
    yield "motif", MOTIF_NAMES
    yield "entropy", (ENTROPY_NAME,)
    yield "cyclical", CYCLICAL_NAMES
