"""Greedy feature ranking by relevance minus redundancy.

Mutual information is estimated on equal-frequency discretizations of the
continuous features (16 bins, natural log). The first pick maximizes
relevance to the label; each later pick maximizes relevance minus the mean
mutual information with the already-selected set. Constant features carry
zero information and sort last; score ties resolve to the lowest column
index so rankings are reproducible.
"""
import numpy as np

#: Equal-frequency bins used for mutual information estimates.
N_BINS = 16


def _discretize(col, bins=N_BINS):
    """Integer codes from equal-frequency binning; constants map to one bin."""
    col = np.asarray(col, dtype=float)
    edges = np.quantile(col, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    edges = np.unique(edges)
    if edges.size == 0:
        return np.zeros(col.shape[0], dtype=np.intp)
    return np.searchsorted(edges, col, side="left").astype(np.intp)


def mutual_information(a_codes, b_codes):
    """Mutual information of two discrete code arrays [nats]."""
    a_codes = np.asarray(a_codes, dtype=np.intp)
    b_codes = np.asarray(b_codes, dtype=np.intp)
    na = int(a_codes.max()) + 1
    nb = int(b_codes.max()) + 1
    joint = np.bincount(a_codes * nb + b_codes, minlength=na * nb).astype(float)
    joint = joint.reshape(na, nb) / a_codes.shape[0]
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    outer = np.outer(pa, pb)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))


def rank_features(x, y, k=None, bins=N_BINS):
    """Order feature columns by relevance to ``y`` minus mean redundancy.

    Returns (indices, scores) where scores[i] is the criterion value at the
    step feature indices[i] was chosen.
    """
    x = np.asarray(x, dtype=float)
    n_feat = x.shape[1]
    k = n_feat if k is None else min(k, n_feat)
    codes = [_discretize(x[:, j], bins) for j in range(n_feat)]
    _, y_codes = np.unique(np.asarray(y), return_inverse=True)

    relevance = np.array([mutual_information(c, y_codes) for c in codes])
    pairwise = {}

    def redundancy(j, selected):
        total = 0.0
        for s in selected:
            key = (min(j, s), max(j, s))
            if key not in pairwise:
                pairwise[key] = mutual_information(codes[key[0]], codes[key[1]])
            total += pairwise[key]
        return total / len(selected)

    selected = []
    scores = []
    remaining = list(range(n_feat))
    while remaining and len(selected) < k:
        if not selected:
            crit = [relevance[j] for j in remaining]
        else:
            crit = [relevance[j] - redundancy(j, selected) for j in remaining]
        best_pos = int(np.argmax(crit))  # argmax takes the first = lowest index on ties
        selected.append(remaining.pop(best_pos))
        scores.append(float(crit[best_pos]))
    return selected, scores
