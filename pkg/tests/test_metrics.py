import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckdnet.errors import DegenerateError, InputError
from ckdnet.metrics import (
    CurvePoints, accuracy, auc_trapezoid, average_precision, class_precision_recall_f1,
    classification_report, confusion_matrix, pr_curve_ovr, roc_curve_ovr, write_confusion_csv,
)


def mann_whitney_auc(scores, positive):
    """O(n^2) pairwise oracle: P(score_pos > score_neg) with ties counted 1/2."""
    pos, neg = scores[positive], scores[~positive]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


# -- confusion matrix / rates -----------------------------------------------

def test_confusion_perfect():
    cm = confusion_matrix([1, 1, 2, 3], [1, 1, 2, 3])
    np.testing.assert_array_equal(np.diag(cm), [0, 2, 1, 1])
    assert cm.sum() - np.trace(cm) == 0


def test_confusion_hand_count():
    cm = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], n_classes=2)
    np.testing.assert_array_equal(cm, [[1, 1], [0, 2]])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
def test_confusion_totals(pairs):
    t, p = map(np.array, zip(*pairs))
    cm = confusion_matrix(t, p)
    assert cm.sum() == len(t)
    assert np.trace(cm) == int(np.sum(t == p))
    assert accuracy(cm) == np.trace(cm) / cm.sum()


@pytest.mark.parametrize("t,p", [([0, 1], [0]), ([0, 4], [0, 1]), ([-1], [0])])
def test_confusion_rejects_bad_input(t, p):
    with pytest.raises(InputError):
        confusion_matrix(t, p)


def test_precision_recall_f1_hand_values():
    rows = class_precision_recall_f1(np.array([[2, 0], [1, 1]]))
    assert rows[0].precision == pytest.approx(2 / 3, abs=1e-15)
    assert rows[0].recall == 1.0
    assert rows[0].f1 == pytest.approx(0.8, abs=1e-15)
    assert rows[1].precision == 1.0 and rows[1].recall == 0.5
    assert rows[1].f1 == pytest.approx(2 / 3, abs=1e-15)


def test_perfect_diagonal_gives_all_ones():
    rows = class_precision_recall_f1(np.diag([7, 3, 2, 9]))
    for r in rows:
        assert (r.precision, r.recall, r.f1, r.flags) == (1.0, 1.0, 1.0, [])


def test_empty_predicted_class_is_flagged():
    rows = class_precision_recall_f1(np.array([[2, 0], [1, 0]]))
    assert rows[1].precision == 0.0 and "no-predictions" in rows[1].flags
    assert rows[1].f1 == 0.0


def test_accuracy_values():
    assert accuracy(np.diag([3, 1, 4, 1])) == 1.0
    assert accuracy(np.array([[2, 0], [1, 1]])) == 0.75
    assert accuracy(np.array([[0, 1], [1, 0]])) == 0.0
    with pytest.raises(InputError):
        accuracy(np.zeros((4, 4), int))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
def test_f1_bounds(pairs):
    t, p = map(np.array, zip(*pairs))
    for r in class_precision_recall_f1(confusion_matrix(t, p)):
        assert 0.0 <= r.f1 <= max(r.precision, r.recall) + 1e-15
        assert (r.f1 == 1.0) == (r.precision == 1.0 and r.recall == 1.0)


# -- ROC / AUC --------------------------------------------------------------

def test_roc_perfect_separation():
    pts = roc_curve_ovr(np.array([0.9, 0.8, 0.3, 0.2]), np.array([1, 1, 0, 0]), 1)
    assert (pts.x[0], pts.y[0]) == (0.0, 0.0) and (pts.x[-1], pts.y[-1]) == (1.0, 1.0)
    assert any(x == 0.0 and y == 1.0 for x, y in zip(pts.x, pts.y))
    assert auc_trapezoid(pts) == 1.0


def test_roc_hand_example():
    pts = roc_curve_ovr(np.array([0.9, 0.6, 0.4, 0.2]), np.array([1, 0, 1, 0]), 1)
    assert auc_trapezoid(pts) == 0.75


def test_roc_uses_class_column_of_score_matrix():
    probs = np.array([[0.1, 0.9], [0.7, 0.3], [0.2, 0.8], [0.6, 0.4]])
    labels = np.array([1, 0, 1, 0])
    assert auc_trapezoid(roc_curve_ovr(probs, labels, 1)) == 1.0
    assert auc_trapezoid(roc_curve_ovr(probs, labels, 0)) == 1.0


def test_diagonal_curve_auc_half():
    assert auc_trapezoid(CurvePoints(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros(2))) == 0.5


def test_auc_rejects_unsorted_x():
    with pytest.raises(InputError):
        auc_trapezoid(CurvePoints(np.array([0.0, 0.6, 0.4, 1.0]), np.zeros(4), np.zeros(4)))


def test_roc_degenerate_single_class():
    with pytest.raises(DegenerateError):
        roc_curve_ovr(np.array([0.1, 0.5]), np.array([2, 2]), 2)


def test_random_scores_auc_near_half():
    rng = np.random.default_rng(0)
    labels = rng.permutation(np.repeat([0, 1], 500))
    auc = auc_trapezoid(roc_curve_ovr(rng.random(1000), labels, 1))
    assert abs(auc - 0.5) <= 0.1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**31 - 1), st.integers(2, 20))
def test_auc_equals_mann_whitney(n, seed, levels):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, levels, n) / levels  # coarse grid forces ties
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    pts = roc_curve_ovr(scores, labels, 1)
    assert abs(auc_trapezoid(pts) - mann_whitney_auc(scores, labels == 1)) <= 1e-9
    assert np.all(np.diff(pts.x) >= 0) and np.all(np.diff(pts.y) >= 0)


def test_auc_invariant_under_monotone_transform(rng):
    scores = rng.random(300)
    labels = rng.integers(0, 2, 300)
    a = auc_trapezoid(roc_curve_ovr(scores, labels, 1))
    b = auc_trapezoid(roc_curve_ovr(np.exp(3 * scores) - 7, labels, 1))
    assert a == b


# -- PR / AP ----------------------------------------------------------------

def test_ap_perfect_ranking():
    pts = pr_curve_ovr(np.array([0.9, 0.8, 0.3, 0.2]), np.array([1, 1, 0, 0]), 1)
    assert average_precision(pts) == 1.0


def test_ap_step_summation_example():
    pts = pr_curve_ovr(np.array([0.9, 0.6, 0.4, 0.2]), np.array([1, 0, 1, 0]), 1)
    np.testing.assert_array_equal(pts.x, [0.5, 0.5, 1.0, 1.0])
    np.testing.assert_array_equal(pts.y, [1.0, 0.5, 2 / 3, 0.5])
    assert average_precision(pts) == 1 * 0.5 + (2 / 3) * 0.5
    assert average_precision(pts) == pytest.approx(5 / 6, abs=1e-15)


def test_ap_single_positive_ranked_last():
    pts = pr_curve_ovr(np.array([0.9, 0.6, 0.4, 0.2]), np.array([0, 0, 0, 1]), 1)
    assert average_precision(pts) == 0.25


def test_pr_requires_a_positive():
    with pytest.raises(DegenerateError):
        pr_curve_ovr(np.array([0.3, 0.2]), np.array([0, 0]), 1)


# -- report -----------------------------------------------------------------

def test_report_on_perfect_predictions(tmp_path):
    labels = np.array([0, 1, 2, 3, 0, 1, 2, 3])
    probs = np.eye(4)[labels] * 0.9 + 0.025
    report = classification_report(labels, probs)
    assert report.accuracy == 1.0
    for r in report.rows:
        assert (r.precision, r.recall, r.f1, r.auc, r.average_precision) == (1, 1, 1, 1, 1)
        assert r.support == 2
    text = report.to_text()
    assert "Cyst" in text and "1.00" in text and "macro avg*" in text
    report.to_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0][:4] == ["class", "precision", "recall", "f1"]
    assert [r[0] for r in rows[1:]] == ["Cyst", "Normal", "Stone", "Tumor", "macro avg", "accuracy"]
    assert float(rows[-1][3]) == 1.0


def test_report_flags_missing_class():
    labels = np.array([0, 0, 1, 1])
    probs = np.array([[.7, .1, .1, .1], [.6, .2, .1, .1], [.1, .7, .1, .1], [.1, .6, .2, .1]])
    report = classification_report(labels, probs)
    stone = report.rows[2]
    assert "auc-undefined" in stone.flags and "ap-undefined" in stone.flags
    assert stone.auc == 0.0


def test_write_confusion_csv(tmp_path):
    write_confusion_csv(np.arange(16).reshape(4, 4), tmp_path / "c.csv")
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["true\\pred", "Cyst", "Normal", "Stone", "Tumor"]
    assert rows[2] == ["Normal", "4", "5", "6", "7"]


def test_curve_csv(tmp_path):
    pts = roc_curve_ovr(np.array([0.9, 0.6, 0.4, 0.2]), np.array([1, 0, 1, 0]), 1)
    pts.to_csv(tmp_path / "roc.csv", "fpr", "tpr")
    rows = list(csv.reader(open(tmp_path / "roc.csv")))
    assert rows[0] == ["threshold", "fpr", "tpr"]
    assert rows[1] == ["inf", "0.0", "0.0"] and rows[-1][1:] == ["1.0", "1.0"]
