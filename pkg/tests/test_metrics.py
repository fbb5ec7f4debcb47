"""ROC/AuC/accuracy and their pairwise-counting cross-check."""
import numpy as np

from stepnav.metrics import (EvalReport, accuracy, auc_pair_count,
                             auc_trapezoid, roc_curve)


def test_auc_hand_case():
    """Scores 0.9+, 0.8-, 0.3+, 0.1-: 3 of 4 pairs ordered correctly."""
    scores = np.array([0.9, 0.8, 0.3, 0.1])
    y = np.array([True, False, True, False])
    assert auc_trapezoid(scores, y) == 0.75
    assert auc_pair_count(scores, y) == 0.75


def test_perfect_separation_gives_unit_area():
    scores = np.array([2.0, 1.5, -0.5, -1.0])
    y = np.array([True, True, False, False])
    assert auc_trapezoid(scores, y) == 1.0
    assert auc_pair_count(scores, y) == 1.0


def test_reversed_ranking_gives_zero_area():
    scores = np.array([-1.0, 1.0])
    y = np.array([True, False])
    assert auc_trapezoid(scores, y) == 0.0


def test_all_scores_tied_gives_half():
    scores = np.zeros(6)
    y = np.array([True, False, True, False, True, False])
    assert auc_pair_count(scores, y) == 0.5
    assert auc_trapezoid(scores, y) == 0.5


def test_trapezoid_equals_pair_counting():
    """Exhaustive agreement on random small instances, ties included."""
    rng = np.random.default_rng(0)
    for trial in range(300):
        n = int(rng.integers(2, 21))
        y = rng.random(n) < 0.5
        if y.all() or not y.any():
            y[0] = ~y[0]
        # Coarse quantization forces frequent score ties.
        scores = np.round(rng.normal(size=n), 1)
        a = auc_trapezoid(scores, y)
        b = auc_pair_count(scores, y)
        assert abs(a - b) < 1e-12, (trial, scores, y)


def test_roc_endpoints_and_monotonicity():
    rng = np.random.default_rng(1)
    scores = rng.normal(size=50)
    y = rng.random(50) < 0.4
    y[0] = True
    y[1] = False
    fpr, tpr = roc_curve(scores, y)
    assert fpr[0] == 0.0 and tpr[0] == 0.0
    assert fpr[-1] == 1.0 and tpr[-1] == 1.0
    assert (np.diff(fpr) >= 0).all()
    assert (np.diff(tpr) >= 0).all()


def test_tied_scores_collapse_to_one_point():
    scores = np.array([0.5, 0.5, 0.5])
    y = np.array([True, False, True])
    fpr, tpr = roc_curve(scores, y)
    assert fpr.shape == (2,)
    np.testing.assert_array_equal(fpr, [0.0, 1.0])
    np.testing.assert_array_equal(tpr, [0.0, 1.0])


def test_accuracy_confusion_case():
    """87 true positives, 97 true negatives out of 200: accuracy 0.92."""
    pred = np.concatenate([np.ones(87), np.zeros(97), np.ones(3), np.zeros(13)])
    truth = np.concatenate([np.ones(87), np.zeros(97), np.zeros(3), np.ones(13)])
    assert accuracy(pred, truth) == 0.92


def test_report_serialization():
    rep = EvalReport(accuracy=0.9, auc=0.95, n_test=10, n_pos=4, n_neg=6,
                     roc=[(0.0, 0.0), (1.0, 1.0)], tp=4, tn=5, fp=1, fn=0,
                     cv_accuracies=[0.9, 0.92])
    d = rep.to_dict()
    assert d["confusion"] == {"tp": 4, "tn": 5, "fp": 1, "fn": 0}
    assert d["roc"] == [[0.0, 0.0], [1.0, 1.0]]
    assert abs(d["cv_mean"] - 0.91) < 1e-12
    bare = EvalReport(accuracy=1.0, auc=1.0, n_test=1, n_pos=1, n_neg=0)
    assert "cv_mean" not in bare.to_dict()
    assert bare.cv_mean is None
