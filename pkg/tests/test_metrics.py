import numpy as np
import pytest

from bcfp.evaluation.metrics import (
    NoPositivesError, SingleClassError, auroc, average_precision, f1_at_threshold,
)


def auroc_oracle(s, y):
    """Fraction of (positive, negative) pairs ranked correctly, ties count one half."""
    pos = [a for a, t in zip(s, y) if t]
    neg = [a for a, t in zip(s, y) if not t]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def ap_oracle(s, y):
    """Sum over distinct thresholds (high to low) of recall gain times precision."""
    n_pos = sum(y)
    out, prev_recall = 0.0, 0.0
    for t in sorted(set(s), reverse=True):
        pred = [a >= t for a in s]
        tp = sum(1 for p, l in zip(pred, y) if p and l)
        recall = tp / n_pos
        out += (recall - prev_recall) * (tp / sum(pred))
        prev_recall = recall
    return out


class TestExamples:
    def test_auroc(self):
        assert auroc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0
        assert auroc([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0]) == 0.75
        assert auroc([0.5] * 6, [1, 0, 1, 0, 0, 1]) == 0.5

    def test_ap(self):
        assert average_precision([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx(5 / 6, abs=1e-15)
        assert average_precision([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0
        assert average_precision([0.4] * 8, [1, 0, 0, 1, 0, 0, 0, 1]) == pytest.approx(3 / 8)

    def test_f1(self):
        assert f1_at_threshold([0.9, 0.1], [1, 0]) == 1.0
        assert f1_at_threshold([0.1, 0.2, 0.3], [1, 0, 1]) == 0.0
        # TP=2, FP=1, FN=1
        assert f1_at_threshold([0.9, 0.8, 0.7, 0.2], [1, 1, 0, 1]) == pytest.approx(2 / 3)
        # the threshold itself counts as positive
        assert f1_at_threshold([0.5], [1]) == 1.0

    def test_errors(self):
        with pytest.raises(SingleClassError):
            auroc([0.1, 0.2], [1, 1])
        with pytest.raises(NoPositivesError):
            average_precision([0.1, 0.2], [0, 0])


def test_oracle_equivalence_1000_instances():
    rng = np.random.default_rng(42)
    for i in range(1000):
        n = int(rng.integers(2, 60))
        y = rng.permutation(np.r_[1, 0, rng.integers(0, 2, size=n - 2)])
        # coarse grid for half the instances so ties are common
        s = rng.integers(0, 5, size=n) / 4 if i % 2 else rng.random(n)
        assert abs(auroc(s, y) - auroc_oracle(s.tolist(), y.tolist())) < 1e-12
        assert abs(average_precision(s, y) - ap_oracle(s.tolist(), y.tolist())) < 1e-12


def test_matches_sklearn_if_available():
    skm = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = np.r_[0, 1, rng.integers(0, 2, 80)]
        s = rng.integers(0, 10, size=y.size) / 10
        assert auroc(s, y) == pytest.approx(skm.roc_auc_score(y, s), abs=1e-12)
        assert average_precision(s, y) == pytest.approx(skm.average_precision_score(y, s), abs=1e-12)
        assert f1_at_threshold(s, y) == pytest.approx(skm.f1_score(y, s >= 0.5), abs=1e-12)
