import numpy as np
import pytest

from bcfp.model import (
    DecisionTree, EmptyMatrixError, Forest, ForestParams, SingleClassError, WidthMismatchError,
    predict_proba, train_forest,
)
from bcfp.rng import Pcg32


def gini(y):
    if len(y) == 0:
        return 0.0
    p = np.mean(y)
    return 1.0 - p * p - (1 - p) * (1 - p)


def brute_force_root(X, y, rows):
    """Best (feature, threshold) by weighted Gini decrease; ties to lower feature, then threshold."""
    Xs, ys = X[rows], y[rows]
    n = len(ys)
    best = None
    for f in range(X.shape[1]):
        vals = np.unique(Xs[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = (a + b) / 2
            left = Xs[:, f] <= thr
            imp = (left.sum() * gini(ys[left]) + (~left).sum() * gini(ys[~left])) / n
            cand = (round(gini(ys) - imp, 12), -f, -thr)
            if best is None or cand > best[0]:
                best = (cand, f, thr)
    return best[1], best[2]


def bootstrap_rows(n, seed, tree):
    rng = Pcg32(seed, tree)
    return np.array([rng.bounded(n) for _ in range(n)])


def sparse_counts(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.poisson(0.3, size=(n, d)).astype(float)
    w = rng.normal(size=d)
    y = (X @ w + rng.normal(scale=0.5, size=n) > 0).astype(int)
    return X, y


class TestSmall:
    def test_separable(self, jit):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0, 0, 1, 1])
        # pick seeds whose bootstrap holds both classes
        seeds = [s for s in range(20) if len(set(y[bootstrap_rows(4, s, 0)])) == 2][:5]
        for s in seeds:
            forest = train_forest(X, y, ForestParams(n_trees=1, max_features="all", seed=s), jit=jit)
            tree = forest.trees[0]
            assert tree.feature[0] == 0 and tree.threshold[0] == 0.5
            assert tree.n_nodes == 3
            assert predict_proba(forest, X, jit=jit).tolist() == [0.0, 0.0, 1.0, 1.0]

    def test_separable_over_many_trees(self, jit):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0, 0, 1, 1])
        forest = train_forest(X, y, ForestParams(n_trees=50, max_features="all"), jit=jit)
        p = predict_proba(forest, X, jit=jit)
        assert p[0] < 0.3 and p[1] < 0.3 and p[2] > 0.7 and p[3] > 0.7

    def test_constant_feature_gives_root_leaf(self, jit):
        X = np.ones((6, 2))
        y = np.array([0, 1, 0, 1, 1, 0])
        forest = train_forest(X, y, ForestParams(n_trees=1, seed=1), jit=jit)
        tree = forest.trees[0]
        assert tree.n_nodes == 1
        prior = y[bootstrap_rows(6, 1, 0)].mean()
        assert np.allclose(predict_proba(forest, X, jit=jit), prior)

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            train_forest(np.zeros((4, 2)), np.zeros(4, dtype=int))

    def test_empty(self):
        with pytest.raises(EmptyMatrixError):
            train_forest(np.zeros((0, 3)), np.zeros(0, dtype=int))
        with pytest.raises(EmptyMatrixError):
            train_forest(np.zeros((4, 0)), np.array([0, 1, 0, 1]))

    def test_width_mismatch(self):
        forest = train_forest(np.eye(4), np.array([0, 1, 0, 1]), ForestParams(n_trees=2))
        with pytest.raises(WidthMismatchError):
            predict_proba(forest, np.zeros((2, 5)))


def test_root_split_matches_brute_force(jit):
    for seed in range(12):
        X, y = sparse_counts(60, 8, seed)
        params = ForestParams(n_trees=1, max_features="all", seed=seed)
        tree = train_forest(X, y, params, jit=jit).trees[0]
        rows = bootstrap_rows(60, seed, 0)
        f, thr = brute_force_root(X, y, rows)
        assert (tree.feature[0], tree.threshold[0]) == (f, thr)


def test_tree_structure_consistent(jit):
    X, y = sparse_counts(120, 30, 4)
    forest = train_forest(X, y, ForestParams(n_trees=5, min_samples_leaf=3, seed=2), jit=jit)
    for t, tree in enumerate(forest.trees):
        internal = tree.feature >= 0
        assert (tree.n_samples[internal] == tree.n_samples[tree.left[internal]]
                + tree.n_samples[tree.right[internal]]).all()
        assert tree.n_samples[0] == 120
        assert (tree.n_samples[~internal] >= 3).all()
        # leaf values are positive fractions of the bootstrap rows reaching them
        rows = bootstrap_rows(120, 2, t)
        leaf_of = np.array([_leaf(tree, X[r]) for r in rows])
        for leaf in np.flatnonzero(~internal):
            mask = leaf_of == leaf
            assert mask.sum() == tree.n_samples[leaf]
            assert tree.value[leaf] == pytest.approx(y[rows][mask].mean())


def _leaf(tree, x):
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return node


def test_max_depth(jit):
    X, y = sparse_counts(100, 10, 5)
    tree = train_forest(X, y, ForestParams(n_trees=1, max_depth=2), jit=jit).trees[0]
    depth = {0: 0}
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            depth[tree.left[i]] = depth[tree.right[i]] = depth[i] + 1
    assert max(depth.values()) <= 2


def test_numba_and_numpy_paths_identical():
    from bcfp._jit import HAVE_NUMBA
    if not HAVE_NUMBA:
        pytest.skip("numba not installed")
    X, y = sparse_counts(150, 80, 9)
    X[:, 3] += np.random.default_rng(0).normal(size=150)  # one real-valued column (argsort path)
    params = ForestParams(n_trees=8, seed=11)
    a = train_forest(X, y, params, jit=True)
    b = train_forest(X, y, params, jit=False)
    assert a.trees == b.trees
    assert np.array_equal(predict_proba(a, X, jit=True), predict_proba(b, X, jit=False))


def test_determinism_and_seed_sensitivity():
    X, y = sparse_counts(80, 20, 1)
    a = train_forest(X, y, ForestParams(n_trees=4, seed=5))
    b = train_forest(X, y, ForestParams(n_trees=4, seed=5))
    c = train_forest(X, y, ForestParams(n_trees=4, seed=6))
    assert a.trees == b.trees and a.trees != c.trees


def test_json_roundtrip():
    X, y = sparse_counts(50, 6, 2)
    forest = train_forest(X, y, ForestParams(n_trees=3))
    back = Forest.from_json(forest.to_json())
    assert back.trees == forest.trees and back.params == forest.params
    assert np.array_equal(predict_proba(back, X), predict_proba(forest, X))


def test_mtry():
    assert ForestParams().mtry(2048) == 45
    assert ForestParams(max_features="all").mtry(7) == 7
    assert ForestParams(max_features=3).mtry(2) == 2


def test_comparable_to_reference_forest():
    """Same protocol, independent implementation: mean AUROC within a few points."""
    sk = pytest.importorskip("sklearn.ensemble")
    from bcfp.evaluation.metrics import auroc
    ours, ref = [], []
    for seed in range(4):
        X, y = sparse_counts(400, 200, 100 + seed)
        tr, te = np.arange(300), np.arange(300, 400)
        f = train_forest(X[tr], y[tr], ForestParams(n_trees=100, seed=seed))
        ours.append(auroc(predict_proba(f, X[te]), y[te]))
        rf = sk.RandomForestClassifier(n_estimators=100, max_features="sqrt", random_state=seed).fit(X[tr], y[tr])
        ref.append(auroc(rf.predict_proba(X[te])[:, 1], y[te]))
    assert abs(np.mean(ours) - np.mean(ref)) < 0.03
