"""Classifier evaluation: ROC construction, area under the curve, accuracy.

The area is integrated with the trapezoid rule over the threshold-swept
curve; for validation it can also be computed by direct positive/negative
pair counting (the two agree exactly up to rounding).
"""
from dataclasses import dataclass, field

import numpy as np


def roc_curve(scores, y_true):
    """False/true positive rates swept over descending score thresholds.

    ``y_true`` is boolean (True = positive class). Returns (fpr, tpr),
    each starting at 0 and ending at 1.
    """
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    y_sorted = y_true[order]
    s_sorted = scores[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # Collapse runs of equal scores: the curve has one point per threshold.
    last_of_run = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp = tp[last_of_run]
    fp = fp[last_of_run]
    n_pos = int(y_true.sum())
    n_neg = y_true.size - n_pos
    tpr = np.r_[0.0, tp / n_pos] if n_pos else np.r_[0.0, np.zeros(tp.size)]
    fpr = np.r_[0.0, fp / n_neg] if n_neg else np.r_[0.0, np.zeros(fp.size)]
    return fpr, tpr


def auc_trapezoid(scores, y_true):
    """Area under the ROC curve by trapezoid integration."""
    fpr, tpr = roc_curve(scores, y_true)
    return float(np.trapezoid(tpr, fpr))


def auc_pair_count(scores, y_true):
    """Area under the ROC curve by positive/negative pair counting.

    Equal scores count half; equals the trapezoid-integrated curve.
    """
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true, dtype=bool)
    pos = scores[y_true]
    neg = scores[~y_true]
    if pos.size == 0 or neg.size == 0:
        return 0.0
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return float(wins / (pos.size * neg.size))


def accuracy(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    return float(np.mean(pred == truth))


@dataclass
class EvalReport:
    """Held-out evaluation summary for a trained step classifier."""

    accuracy: float
    auc: float
    n_test: int
    n_pos: int
    n_neg: int
    roc: list = field(default_factory=list)
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    cv_accuracies: list = field(default_factory=list)

    @property
    def cv_mean(self):
        return float(np.mean(self.cv_accuracies)) if self.cv_accuracies else None

    @property
    def cv_std(self):
        return float(np.std(self.cv_accuracies)) if self.cv_accuracies else None

    def to_dict(self):
        d = {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "n_test": self.n_test,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "roc": [[float(f), float(t)] for f, t in self.roc],
            "confusion": {"tp": self.tp, "tn": self.tn,
                          "fp": self.fp, "fn": self.fn},
        }
        if self.cv_accuracies:
            d["cv_accuracies"] = list(self.cv_accuracies)
            d["cv_mean"] = self.cv_mean
            d["cv_std"] = self.cv_std
        return d


def evaluate_model(model, x, y_steps, cv_accuracies=None):
    """Accuracy and AuC of a model on raw feature rows labeled with steps.

    The positive class is the model's positive-margin step (the fine one).
    """
    from .svm import decision_function, predict_steps

    y_steps = np.asarray(y_steps, dtype=float)
    scores = decision_function(model, x)
    y_true = y_steps == model.pos_step
    pred = predict_steps(model, x)
    pred_pos = pred == model.pos_step
    fpr, tpr = roc_curve(scores, y_true)
    return EvalReport(
        accuracy=accuracy(pred, y_steps),
        auc=auc_trapezoid(scores, y_true),
        n_test=int(y_steps.size),
        n_pos=int(y_true.sum()),
        n_neg=int(y_steps.size - y_true.sum()),
        roc=list(zip(fpr.tolist(), tpr.tolist())),
        tp=int(np.sum(pred_pos & y_true)),
        tn=int(np.sum(~pred_pos & ~y_true)),
        fp=int(np.sum(pred_pos & ~y_true)),
        fn=int(np.sum(~pred_pos & y_true)),
        cv_accuracies=list(cv_accuracies) if cv_accuracies else [],
    )
