import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frustra.errors import DataError
from frustra.metrics import (classification_report, evaluate_scores, format_report,
                             roc_auc, roc_curve_points)

from oracles import oracle_auc


class TestClassificationReport:
    def test_perfect_predictions(self):
        y = [0, 0, 1, 1, 1]
        report = classification_report(y, y)
        for cls in (0, 1):
            m = report.per_class[cls]
            assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)
        assert report.accuracy == 1.0

    def test_all_predicted_positive(self):
        y = [0, 0, 1, 1]
        report = classification_report(y, [1, 1, 1, 1])
        assert report.per_class[1].recall == 1.0
        assert report.per_class[0].recall == 0.0
        assert report.accuracy == 0.5
        assert report.zero_division_hit  # class-0 precision has empty denominator

    def test_hand_computed_confusion(self):
        # TP=3, FP=1, FN=2, TN=4 for the positive class
        y_true = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        y_pred = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0]
        report = classification_report(y_true, y_pred)
        pos = report.per_class[1]
        assert pos.precision == pytest.approx(0.75)
        assert pos.recall == pytest.approx(0.6)
        assert pos.f1 == pytest.approx(2 / 3, abs=1e-4)

    def test_supports_sum_to_n(self):
        y_true = [0, 1, 1, 0, 1]
        report = classification_report(y_true, [1, 0, 1, 0, 1])
        assert report.per_class[0].support + report.per_class[1].support == 5
        assert report.n == 5

    def test_weighted_average_uses_support(self):
        y_true = [0] * 9 + [1]
        y_pred = [0] * 10
        report = classification_report(y_true, y_pred)
        expected = (report.per_class[0].f1 * 9 + report.per_class[1].f1 * 1) / 10
        assert report.weighted_avg.f1 == pytest.approx(expected)

    def test_swapped_labels_swap_per_class_rows(self):
        y_true = [0, 0, 1, 1, 0, 1, 0]
        y_pred = [0, 1, 1, 0, 0, 1, 1]
        report = classification_report(y_true, y_pred)
        flipped = classification_report([1 - v for v in y_true], [1 - v for v in y_pred])
        assert report.per_class[0] == flipped.per_class[1]
        assert report.per_class[1] == flipped.per_class[0]

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            classification_report([0, 1], [0, 1, 1])

    def test_format_is_table_shaped(self):
        text = format_report(classification_report([0, 1], [0, 1]))
        assert "Precision" in text and "Macro avg" in text


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_ties_is_half(self):
        assert roc_auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_worked_example(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == pytest.approx(0.75)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            roc_auc([1, 1, 1], [0.1, 0.2, 0.3])

    def test_matches_pairwise_oracle_on_random_sets(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 201))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            scores = np.round(rng.uniform(0, 1, n), 2)  # rounding forces ties
            assert roc_auc(y, scores) == pytest.approx(oracle_auc(y, scores), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1_000_000)),
                    min_size=4, max_size=60))
    @settings(max_examples=150, deadline=None)
    def test_invariant_under_monotone_transform(self, pairs):
        # scores on a 1e-6 grid so the float transforms below stay strictly monotone
        y = [label for label, _ in pairs]
        if len(set(y)) < 2:
            y[0] = 1 - y[0]
        scores = np.array([s for _, s in pairs]) / 1_000_000.0
        base = roc_auc(y, scores)
        assert roc_auc(y, 3.0 * scores + 2.0) == pytest.approx(base, abs=1e-12)
        assert roc_auc(y, np.exp(scores)) == pytest.approx(base, abs=1e-12)


class TestRocCurve:
    def test_endpoints_and_monotonicity(self, rng):
        y = rng.integers(0, 2, 100)
        y[:2] = [0, 1]
        scores = rng.uniform(0, 1, 100)
        thresholds, fpr, tpr = roc_curve_points(y, scores)
        assert thresholds.shape == fpr.shape == tpr.shape
        assert fpr[-1] == 1.0 and tpr[-1] == 1.0
        assert np.all(np.diff(fpr) >= 0)
        assert np.all(np.diff(tpr) >= 0)


class TestEvaluateScores:
    def test_threshold_convention(self):
        report = evaluate_scores([0, 1], [0.49, 0.5])
        assert report.accuracy == 1.0

    def test_includes_auc(self):
        report = evaluate_scores([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
        assert report.roc_auc == pytest.approx(0.75)
