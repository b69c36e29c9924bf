import numpy as np
import pytest

from landcnn.metrics import (ConfusionMatrix, accuracy, classification_report,
                             confusion_matrix)

from helpers import brute_force_report


def test_identity_predictions_are_diagonal():
    y = [0, 1, 2, 3, 1, 2]
    cm = confusion_matrix(y, y, 4)
    assert (cm.counts == np.diag([1, 2, 2, 1])).all()


def test_direct_counting_example():
    cm = confusion_matrix([0, 0, 1], [0, 1, 1], 2)
    assert cm.counts.tolist() == [[1, 1], [0, 1]]


def test_random_matrix_matches_pair_counting_oracle():
    rng = np.random.default_rng(0)
    y_true = rng.integers(0, 4, size=200)
    y_pred = rng.integers(0, 4, size=200)
    cm = confusion_matrix(y_true, y_pred, 4)
    for t in range(4):
        for p in range(4):
            assert cm.counts[t, p] == int(np.sum((y_true == t) & (y_pred == p)))


def test_length_mismatch_and_range_errors():
    with pytest.raises(ValueError, match="length"):
        confusion_matrix([0, 1], [0], 2)
    with pytest.raises(ValueError, match="outside"):
        confusion_matrix([0, 2], [0, 1], 2)


def test_accuracy_all_correct():
    cm = confusion_matrix([0, 1, 2], [0, 1, 2], 3)
    assert accuracy(cm) == 100.0


def test_accuracy_binary_form():
    # TP=3, TN=4, FP=2, FN=1 with class 0 as positive
    cm = ConfusionMatrix(np.array([[3, 1], [2, 4]], dtype=np.int64), ["pos", "neg"])
    assert accuracy(cm) == 70.0


def test_accuracy_binary_form_enumerated():
    for tp in range(6):
        for tn in range(6):
            for fp in range(6):
                for fn in range(6):
                    total = tp + tn + fp + fn
                    if total == 0:
                        continue
                    cm = ConfusionMatrix(
                        np.array([[tp, fn], [fp, tn]], dtype=np.int64), ["p", "n"])
                    assert accuracy(cm) == (tp + tn) / total * 100.0


def test_accuracy_trace_form_full_support():
    counts = np.full((4, 4), 70, dtype=np.int64)
    np.fill_diagonal(counts, 1050 - 3 * 70)
    # 4200 items, 3990 on the diagonal
    counts = np.zeros((4, 4), dtype=np.int64)
    np.fill_diagonal(counts, [1000, 990, 1005, 995])
    counts[0, 1] = 50
    counts[1, 0] = 60
    counts[2, 3] = 45
    counts[3, 2] = 55
    cm = ConfusionMatrix(counts, list("abcd"))
    assert cm.total == 4200
    assert np.trace(cm.counts) == 3990
    assert accuracy(cm) == pytest.approx(95.0)


def test_accuracy_empty_matrix_is_an_error():
    cm = ConfusionMatrix(np.zeros((3, 3), dtype=np.int64), list("abc"))
    with pytest.raises(ValueError):
        accuracy(cm)


def test_report_hand_example():
    cm = ConfusionMatrix(np.array([[9, 1], [2, 8]], dtype=np.int64), ["x", "y"])
    report = classification_report(cm)
    r0, r1 = report.rows
    assert r0.precision == pytest.approx(9 / 11, abs=1e-12)
    assert r0.recall == pytest.approx(0.9, abs=1e-12)
    assert r0.f1 == pytest.approx(0.8571, abs=5e-5)
    assert r1.precision == pytest.approx(8 / 9, abs=1e-12)
    assert r1.recall == pytest.approx(0.8, abs=1e-12)
    assert r1.f1 == pytest.approx(0.8421, abs=5e-5)
    assert r0.support == 10 and r1.support == 10


def test_report_perfect_diagonal():
    cm = confusion_matrix([0, 1, 2] * 5, [0, 1, 2] * 5, 3)
    report = classification_report(cm)
    for row in report.rows:
        assert row.precision == row.recall == row.f1 == 1.0
    assert report.accuracy == 1.0


def test_report_equal_supports_macro_equals_weighted():
    rng = np.random.default_rng(1)
    y_true = np.repeat(np.arange(4), 25)
    y_pred = rng.integers(0, 4, size=100)
    report = classification_report(confusion_matrix(y_true, y_pred, 4))
    for m, w in zip(report.macro_avg, report.weighted_avg):
        assert m == pytest.approx(w, abs=1e-12)


def test_report_zero_division_flagged():
    # class 2 never predicted and never present -> 0/0 rates
    cm = confusion_matrix([0, 0, 1], [0, 1, 1], 3)
    report = classification_report(cm)
    assert report.zero_division
    assert report.rows[2].precision == 0.0
    assert report.rows[2].recall == 0.0


def test_report_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    for _ in range(25):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, 400))
        y_true = rng.integers(0, k, size=n)
        y_pred = rng.integers(0, k, size=n)
        report = classification_report(confusion_matrix(y_true, y_pred, k))
        oracle_rows, oracle_acc = brute_force_report(list(y_true), list(y_pred), k)
        assert report.accuracy == oracle_acc
        for row, (p, r, f1, support) in zip(report.rows, oracle_rows):
            assert row.precision == p
            assert row.recall == r
            assert row.f1 == f1
            assert row.support == support


def test_row_and_column_sum_invariants():
    rng = np.random.default_rng(3)
    y_true = rng.integers(0, 4, size=300)
    y_pred = rng.integers(0, 4, size=300)
    cm = confusion_matrix(y_true, y_pred, 4)
    for c in range(4):
        tp = cm.counts[c, c]
        fn = cm.counts[c, :].sum() - tp
        fp = cm.counts[:, c].sum() - tp
        assert tp + fn == cm.supports[c]
        assert tp + fp == cm.counts[:, c].sum()
    assert np.trace(cm.counts) <= cm.total
    assert 0.0 <= accuracy(cm) <= 100.0


def test_equal_support_recall_bounds_accuracy():
    rng = np.random.default_rng(4)
    y_true = np.repeat(np.arange(4), 50)
    y_pred = rng.integers(0, 4, size=200)
    cm = confusion_matrix(y_true, y_pred, 4)
    report = classification_report(cm)
    recalls = [row.recall for row in report.rows]
    assert min(recalls) <= accuracy(cm) / 100.0 <= max(recalls)


def test_csv_and_text_rendering():
    cm = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2, ["desert", "meadow"])
    report = classification_report(cm)
    csv = report.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "class,precision,recall,f1,support"
    assert lines[1].startswith("desert,")
    assert lines[-2].startswith("macro_avg,")
    assert lines[-1].startswith("weighted_avg,")
    text = report.format_text()
    assert "precision" in text and "macro avg" in text and "weighted avg" in text
    assert "desert" in text
    cm_csv = cm.to_csv()
    assert cm_csv.splitlines()[0] == "true\\pred,desert,meadow"
