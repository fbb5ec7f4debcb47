"""Feature ranking: relevance ordering, redundancy penalty, tie handling."""
import numpy as np

from stepnav.mrmr import mutual_information, rank_features


def _synthetic(rng, n=400):
    """Feature matrix where column 0 determines the binary label."""
    y = (rng.random(n) < 0.5).astype(float)
    x = np.column_stack([
        y + rng.normal(scale=0.01, size=n),   # near-copy of the label
        rng.normal(size=n),                    # noise
        rng.normal(size=n),                    # noise
        rng.normal(size=n) * 0.5 + 2.0,        # noise, shifted
    ])
    return x, y


def test_label_determining_feature_ranks_first():
    rng = np.random.default_rng(0)
    x, y = _synthetic(rng)
    order, scores = rank_features(x, y)
    assert order[0] == 0
    assert scores[0] > 0.5


def test_duplicate_never_fills_top_two():
    """A copy of the winner is pure redundancy and must not follow it."""
    rng = np.random.default_rng(1)
    x, y = _synthetic(rng)
    x = np.hstack([x, x[:, [0]]])  # column 4 duplicates column 0
    order, _ = rank_features(x, y)
    assert order[0] in (0, 4)
    assert order[1] not in (0, 4)


def test_constant_feature_has_zero_relevance():
    rng = np.random.default_rng(2)
    x, y = _synthetic(rng)
    x = np.hstack([x, np.full((x.shape[0], 1), 3.3)])
    order, scores = rank_features(x, y)
    assert order[0] == 0
    by_feature = dict(zip(order, scores))
    assert by_feature[4] <= 0.0


def test_tied_features_resolve_to_lowest_index():
    rng = np.random.default_rng(3)
    y = (rng.random(300) < 0.5).astype(float)
    noise = rng.normal(size=300)
    x = np.column_stack([noise, noise, y])
    order, _ = rank_features(x, y)
    assert order[0] == 2
    assert order[1] == 0  # identical columns 0/1: lowest index wins
    assert order[2] == 1


def test_k_limits_selection():
    rng = np.random.default_rng(4)
    x, y = _synthetic(rng)
    order, scores = rank_features(x, y, k=2)
    assert len(order) == len(scores) == 2


def test_ranking_is_deterministic():
    rng = np.random.default_rng(5)
    x, y = _synthetic(rng)
    a = rank_features(x, y)
    b = rank_features(x, y)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_mutual_information_known_values():
    # Identical fair coins: I = ln 2. Independent constants: I = 0.
    a = np.array([0, 1] * 50)
    assert abs(mutual_information(a, a) - np.log(2.0)) < 1e-12
    assert mutual_information(a, np.zeros(100, dtype=int)) == 0.0
    # Independent coins on a large sample: close to zero.
    rng = np.random.default_rng(6)
    b = (rng.random(4000) < 0.5).astype(int)
    c = (rng.random(4000) < 0.5).astype(int)
    assert mutual_information(b, c) < 5e-3


def test_mutual_information_symmetry():
    rng = np.random.default_rng(7)
    a = rng.integers(0, 4, size=500)
    b = rng.integers(0, 3, size=500)
    assert abs(mutual_information(a, b) - mutual_information(b, a)) < 1e-14
