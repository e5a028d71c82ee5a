import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from autodess.classifiers import (KINDS, ClassifierSpec, FittedClassifier, SpecError,
                                  cv_accuracy, default_spec, fit_base, hpo_classifier)
from autodess.dataio import Dataset


class FixedScores(FittedClassifier):
    def __init__(self, scores):
        self.scores = np.asarray(scores, dtype=float)
        self.spec = default_spec("ridge_classifier")
        self.n_classes = self.scores.shape[1]
        self.n_features = 1
        self.n_train = 0

    def _scores(self, X):
        return self.scores[: len(X)]


def _random_dataset(seed, n=45, d=3, K=3):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % K
    X = rng.normal(size=(n, d)) + 1.5 * y[:, None]
    return Dataset(X, y, K)


def gauss_solve(A, b):
    """Gaussian elimination with partial pivoting, written out by hand."""
    A = [list(map(float, row)) + [float(v)] for row, v in zip(A, b)]
    n = len(A)
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(A[r][c]))
        A[c], A[p] = A[p], A[c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            for j in range(c, n + 1):
                A[r][j] -= f * A[c][j]
    x = [0.0] * n
    for r in reversed(range(n)):
        x[r] = (A[r][n] - sum(A[r][j] * x[j] for j in range(r + 1, n))) / A[r][r]
    return x


# ------------------------------------------------------------------ specs

def test_probabilistic_flag_by_kind():
    flags = {k: default_spec(k).probabilistic for k in KINDS}
    assert {k for k, v in flags.items() if not v} == {"perceptron", "ridge_classifier"}


def test_spec_rejects_out_of_range_and_unknown():
    with pytest.raises(SpecError):
        ClassifierSpec("knn", {"k": 40})
    with pytest.raises(SpecError):
        ClassifierSpec("knn", {"depth": 3})
    with pytest.raises(SpecError):
        ClassifierSpec("svm")


def test_spec_roundtrip():
    s = ClassifierSpec("decision_tree", {"max_depth": 4, "min_leaf": 2})
    assert ClassifierSpec.from_dict(s.to_dict()) == s


# ------------------------------------------------------------------ fit_base

def test_knn_one_neighbor_returns_own_label():
    d = _random_dataset(1)
    m = fit_base(ClassifierSpec("knn", {"k": 1}), d)
    assert np.array_equal(m.predict(d.X), d.y)


def test_logistic_separable_blobs(separable):
    sub = separable.subset(np.arange(20))
    m = fit_base(default_spec("logistic_regression"), sub)
    assert np.mean(m.predict(sub.X) == sub.y) == 1.0


def _replay(tree, x):
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return node


def test_unlimited_tree_is_pure_on_unique_points():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 2))
    y = rng.integers(0, 3, 30)
    m = fit_base(ClassifierSpec("decision_tree", {"max_depth": None}), Dataset(X, y, 3))
    assert np.mean(m.predict(X) == y) == 1.0
    leaves = {}
    for xi, yi in zip(X, y):
        leaves.setdefault(_replay(m.tree, xi), set()).add(int(yi))
    assert all(len(labels) == 1 for labels in leaves.values())


def test_gaussian_nb_constant_feature_is_floored():
    d = _random_dataset(2)
    X = np.column_stack([d.X, np.full(d.n, 3.0)])
    m = fit_base(default_spec("gaussian_nb"), Dataset(X, d.y, 3))
    P = m.decision_scores(X)
    assert np.isfinite(P).all()


def test_empty_train_rejected():
    with pytest.raises(ValueError):
        fit_base(default_spec("knn"), Dataset(np.zeros((0, 2)), np.zeros(0, int), 2))


# ------------------------------------------------------------------ predict / scores

def test_argmax_examples():
    assert FixedScores([[0.2, 0.8]]).predict(np.zeros((1, 1))).tolist() == [1]
    assert FixedScores([[0.5, 0.5]]).predict(np.zeros((1, 1))).tolist() == [0]


def test_argmax_against_loop_oracle():
    S = np.random.default_rng(0).random((10, 3))
    oracle = [max(range(3), key=lambda c: (row[c], -c)) for row in S]
    assert FixedScores(S).predict(np.zeros((10, 1))).tolist() == oracle


def test_dimension_mismatch():
    d = _random_dataset(3)
    m = fit_base(default_spec("knn"), d)
    with pytest.raises(ValueError):
        m.predict(np.zeros((2, 5)))


def test_gaussian_nb_rows_sum_to_one():
    d = _random_dataset(4)
    P = fit_base(default_spec("gaussian_nb"), d).decision_scores(np.random.default_rng(1).normal(size=(50, 3)) * 5)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_knn_vote_fractions():
    X = np.array([[0.0], [0.1], [0.2], [5.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_base(ClassifierSpec("knn", {"k": 3}), Dataset(X, y, 2))
    np.testing.assert_allclose(m.decision_scores([[0.05]]), [[2 / 3, 1 / 3]])


def test_ridge_margins_match_normal_equations():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(5, 2))
    y = np.array([0, 1, 0, 1, 1])
    alpha = 0.7
    m = fit_base(ClassifierSpec("ridge_classifier", {"alpha": alpha}), Dataset(X, y, 2))
    Xa = np.column_stack([X, np.ones(5)])
    pen = np.diag([alpha, alpha, 0.0])  # intercept left unpenalized
    for k in range(2):
        t = np.where(y == k, 1.0, -1.0)
        w = gauss_solve((Xa.T @ Xa + pen).tolist(), (Xa.T @ t).tolist())
        np.testing.assert_allclose(m.decision_scores(X)[:, k], Xa @ np.array(w), atol=1e-10)


# ------------------------------------------------------------------ hpo

def test_hpo_budget_zero_returns_spec():
    s = ClassifierSpec("knn", {"k": 9})
    assert hpo_classifier(s, _random_dataset(5), 0) is s


def test_hpo_deterministic():
    d = _random_dataset(6)
    s = default_spec("decision_tree")
    assert hpo_classifier(s, d, 4, seed=3) == hpo_classifier(s, d, 4, seed=3)


def test_hpo_knn_lands_in_exhaustive_top_two():
    rng = np.random.default_rng(8)
    y = np.arange(120) % 2
    X = rng.normal(size=(120, 2)) + 1.2 * y[:, None]
    d = Dataset(X, y, 2)
    grid = {k: cv_accuracy(ClassifierSpec("knn", {"k": k}), d, seed=0) for k in range(1, 16)}
    second = sorted(set(grid.values()), reverse=True)[1]
    got = hpo_classifier(default_spec("knn"), d, 15, seed=0)
    assert grid[got.hyperparameters["k"]] >= second


# ------------------------------------------------------------------ invariants

@given(st.sampled_from(KINDS), st.integers(0, 500))
def test_predict_is_argmax_and_probabilities_normalized(kind, seed):
    d = _random_dataset(seed, n=30)
    m = fit_base(default_spec(kind), d, seed)
    Q = np.random.default_rng(seed + 1).normal(size=(20, 3)) * 3
    S = m.decision_scores(Q)
    assert S.shape == (20, 3)
    assert np.array_equal(m.predict(Q), np.argmax(S, axis=1))
    assert set(m.predict(Q)) <= {0, 1, 2}
    if m.probabilistic:
        assert S.min() >= 0 and S.max() <= 1
        np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_fit_is_deterministic(kind):
    d = _random_dataset(9)
    a = fit_base(default_spec(kind), d, seed=4).decision_scores(d.X)
    b = fit_base(default_spec(kind), d, seed=4).decision_scores(d.X)
    assert np.array_equal(a, b)


@given(st.integers(0, 500))
def test_single_unbootstrapped_bag_equals_tree(seed):
    d = _random_dataset(seed, n=40)
    tree = fit_base(ClassifierSpec("decision_tree", {"max_depth": None}), d, seed)
    bag = fit_base(ClassifierSpec("bagged_trees", {"n": 1, "bootstrap": False}), d, seed)
    Q = np.random.default_rng(seed).normal(size=(25, 3)) * 2
    assert np.array_equal(tree.predict(Q), bag.predict(Q))
