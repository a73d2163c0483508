"""Classification metrics: per-class report, exact rank-based ROC AUC, ROC points.

AUC is the normalized Mann-Whitney U statistic computed from average ranks,
which counts tied score pairs as one half; this equals exhaustive pairwise
comparison exactly, with no curve sampling involved.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .errors import DataError
from .fileio import meta_line, open_for_write
from .validation import check_labels


@dataclass(frozen=True, slots=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    """Accuracy, AUC, and the per-class precision/recall/F1 table."""

    accuracy: float
    per_class: dict[int, ClassMetrics]
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics
    roc_auc: float | None = None
    zero_division_hit: bool = False
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def positive_f1(self) -> float:
        return self.per_class[1].f1

    @property
    def macro_f1(self) -> float:
        return self.macro_avg.f1

    @property
    def n(self) -> int:
        return self.macro_avg.support


def _safe_ratio(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def classification_report(y_true: Sequence[int], y_pred: Sequence[int]) -> MetricsReport:
    """Per-class precision/recall/F1 with macro and weighted averages.

    Zero-denominator precision or recall is reported as 0 and flagged.
    """
    yt = check_labels(np.asarray(y_true))
    yp = check_labels(np.asarray(y_pred), n_rows=yt.shape[0])
    if yt.shape[0] == 0:
        raise DataError("cannot report metrics on an empty set")

    flagged = False
    per_class: dict[int, ClassMetrics] = {}
    for cls in (0, 1):
        tp = int(np.sum((yp == cls) & (yt == cls)))
        fp = int(np.sum((yp == cls) & (yt != cls)))
        fn = int(np.sum((yp != cls) & (yt == cls)))
        precision, p_hit = _safe_ratio(tp, tp + fp)
        recall, r_hit = _safe_ratio(tp, tp + fn)
        f1, f_hit = _safe_ratio(2 * precision * recall, precision + recall)
        flagged = flagged or p_hit or r_hit or f_hit
        per_class[cls] = ClassMetrics(precision, recall, f1, int(np.sum(yt == cls)))

    n = yt.shape[0]
    accuracy = float(np.mean(yt == yp))
    macro = ClassMetrics(
        precision=sum(m.precision for m in per_class.values()) / 2,
        recall=sum(m.recall for m in per_class.values()) / 2,
        f1=sum(m.f1 for m in per_class.values()) / 2,
        support=n,
    )
    weighted = ClassMetrics(
        precision=sum(m.precision * m.support for m in per_class.values()) / n,
        recall=sum(m.recall * m.support for m in per_class.values()) / n,
        f1=sum(m.f1 * m.support for m in per_class.values()) / n,
        support=n,
    )
    return MetricsReport(accuracy=accuracy, per_class=per_class, macro_avg=macro,
                         weighted_avg=weighted, zero_division_hit=flagged)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    i = 0
    while i < scores.shape[0]:
        j = i
        while j + 1 < scores.shape[0] and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(y_true: Sequence[int], scores: Sequence[float]) -> float:
    """Exact AUC: P(score_pos > score_neg) + 0.5 P(score_pos = score_neg)."""
    yt = check_labels(np.asarray(y_true), require_both_classes=True)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[0] != yt.shape[0]:
        raise DataError("labels and scores must have the same length")
    if not np.all(np.isfinite(s)):
        raise DataError("scores contain non-finite values")
    n_pos = int(np.sum(yt == 1))
    n_neg = yt.shape[0] - n_pos
    ranks = _average_ranks(s)
    rank_sum = float(np.sum(ranks[yt == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve_points(y_true: Sequence[int], scores: Sequence[float]
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, fpr, tpr) at every distinct score, descending, for plotting."""
    yt = check_labels(np.asarray(y_true), require_both_classes=True)
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], yt[order]
    distinct = np.nonzero(np.diff(s_sorted))[0]
    cutpoints = np.concatenate([distinct, [s_sorted.shape[0] - 1]])
    tps = np.cumsum(y_sorted)[cutpoints].astype(np.float64)
    fps = (cutpoints + 1 - tps).astype(np.float64)
    n_pos = float(np.sum(yt == 1))
    n_neg = float(yt.shape[0] - n_pos)
    thresholds = s_sorted[cutpoints]
    return thresholds, fps / n_neg, tps / n_pos


def evaluate_scores(y_true: Sequence[int], scores: Sequence[float],
                    threshold: float = 0.5) -> MetricsReport:
    """Full report from real-valued scores: threshold for the table, ranks for AUC.

    Scores at the threshold predict the positive class.
    """
    s = np.asarray(scores, dtype=np.float64)
    report = classification_report(y_true, (s >= threshold).astype(np.int64))
    report.roc_auc = roc_auc(y_true, s)
    return report


def format_report(report: MetricsReport, title: str | None = None) -> str:
    """Human-readable table in the conventional classification-report layout."""
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Class':<14}{'Precision':>10}{'Recall':>10}{'F1-score':>10}{'Support':>10}")
    for cls in (0, 1):
        m = report.per_class[cls]
        lines.append(f"{cls:<14}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10}")
    lines.append(f"{'Accuracy':<14}{'':>10}{'':>10}{report.accuracy:>10.4f}{report.n:>10}")
    for name, m in (("Macro avg", report.macro_avg), ("Weighted avg", report.weighted_avg)):
        lines.append(f"{name:<14}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10}")
    if report.roc_auc is not None:
        lines.append(f"{'ROC AUC':<14}{'':>10}{'':>10}{report.roc_auc:>10.4f}{'':>10}")
    if report.zero_division_hit:
        lines.append("note: at least one precision/recall denominator was zero (reported as 0)")
    return "\n".join(lines) + "\n"


def report_rows(report: MetricsReport) -> list[tuple[str, str]]:
    """Flat (metric, value) rows for machine-readable output."""
    rows: list[tuple[str, str]] = [("accuracy", repr(report.accuracy))]
    if report.roc_auc is not None:
        rows.append(("roc_auc", repr(report.roc_auc)))
    rows.append(("macro_f1", repr(report.macro_f1)))
    rows.append(("positive_f1", repr(report.positive_f1)))
    for cls in (0, 1):
        m = report.per_class[cls]
        rows.extend([
            (f"precision_{cls}", repr(m.precision)),
            (f"recall_{cls}", repr(m.recall)),
            (f"f1_{cls}", repr(m.f1)),
            (f"support_{cls}", repr(float(m.support))),
        ])
    return rows


def write_report(report: MetricsReport, destination: str | Path | IO,
                 meta: dict[str, str] | None = None, title: str | None = None) -> None:
    """Write the text table to ``destination`` and metric rows to ``<destination>.csv``."""
    with open_for_write(destination) as handle:
        if meta:
            handle.write(meta_line("report", meta))
        handle.write(format_report(report, title))
    if isinstance(destination, (str, Path)):
        csv_path = Path(str(destination) + ".csv")
        with open_for_write(csv_path) as handle:
            if meta:
                handle.write(meta_line("report-csv", meta))
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(("metric", "value"))
            writer.writerows(report_rows(report))
