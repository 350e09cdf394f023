import numpy as np
import pytest

from bcfp.evaluation.splits import (
    DegenerateSplitError, SplitPlan, TooFewPerClassError, stratified_holdout, stratified_kfold,
)


def test_forced_stratification():
    tr, te = stratified_holdout([1, 1, 0, 0], 0.5, 0)
    y = np.array([1, 1, 0, 0])
    assert sorted(y[te]) == [0, 1] and sorted(y[tr]) == [0, 1]


def test_deterministic():
    y = np.r_[np.ones(30), np.zeros(70)].astype(int)
    a = stratified_holdout(y, 0.2, 7)
    b = stratified_holdout(y, 0.2, 7)
    c = stratified_holdout(y, 0.2, 8)
    assert all(np.array_equal(x, z) for x, z in zip(a, b))
    assert not np.array_equal(a[1], c[1])


def test_holdout_size_1957_all_class_splits():
    """Test size is 391 or 392 whatever the class balance."""
    for n_pos in range(3, 1955, 7):
        y = np.r_[np.ones(n_pos), np.zeros(1957 - n_pos)].astype(int)
        tr, te = stratified_holdout(y, 0.2, n_pos)
        assert len(te) in (391, 392)
        assert len(tr) + len(te) == 1957 and not set(tr) & set(te)
        for c, n_c in ((1, n_pos), (0, 1957 - n_pos)):
            got = int((y[te] == c).sum())
            assert abs(got - 0.2 * n_c) <= 0.5


def test_holdout_partition_and_bounds():
    rng = np.random.default_rng(3)
    for seed in range(20):
        y = rng.integers(0, 2, size=int(rng.integers(20, 300)))
        if y.sum() < 3 or (1 - y).sum() < 3:
            continue
        tr, te = stratified_holdout(y, 0.25, seed)
        assert np.array_equal(np.sort(np.r_[tr, te]), np.arange(y.size))
        for c in (0, 1):
            assert abs((y[te] == c).sum() - 0.25 * (y == c).sum()) <= 0.5


def test_degenerate():
    with pytest.raises(DegenerateSplitError):
        stratified_holdout([1, 1, 1], 0.5, 0)
    with pytest.raises(DegenerateSplitError):
        stratified_holdout([1, 0, 0, 0], 0.2, 0)
    with pytest.raises(ValueError):
        stratified_holdout([1, 0], 1.5, 0)


def test_kfold_one_of_each():
    y = np.array([1, 0] * 5)
    folds = stratified_kfold(y, 5, 0)
    assert len(folds) == 5
    for tr, te in folds:
        assert sorted(y[te]) == [0, 1]


def test_kfold_partitions_and_balance():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, size=237)
    folds = stratified_kfold(y, 5, 3, repeats=5)
    assert len(folds) == 25
    for r in range(5):
        tests = [te for _, te in folds[5 * r:5 * r + 5]]
        assert np.array_equal(np.sort(np.concatenate(tests)), np.arange(237))
        sizes = [len(t) for t in tests]
        assert max(sizes) - min(sizes) <= 1
        for c in (0, 1):
            per = [(y[t] == c).sum() for t in tests]
            assert max(per) - min(per) <= 1
    for tr, te in folds:
        assert not set(tr) & set(te) and len(tr) + len(te) == 237


def test_kfold_too_few():
    with pytest.raises(TooFewPerClassError):
        stratified_kfold([1, 1, 0, 0, 0, 0], 3, 0)


def test_split_plan_ids():
    y = np.array([1, 0] * 10)
    plan = SplitPlan("kfold", (0, 1), k=2)
    assert [sid for sid, _, _ in plan.splits(y)] == ["rep0_fold0", "rep0_fold1", "rep1_fold0", "rep1_fold1"]
    plan = SplitPlan("holdout", (4, 9))
    assert [sid for sid, _, _ in plan.splits(y)] == ["seed4", "seed9"]


def test_same_seed_same_split_across_calls():
    y = np.random.default_rng(5).integers(0, 2, size=100)
    a = SplitPlan("holdout", tuple(range(3))).splits(y)
    b = SplitPlan("holdout", tuple(range(3))).splits(y)
    for (i, tr, te), (j, tr2, te2) in zip(a, b):
        assert i == j and np.array_equal(te, te2)
