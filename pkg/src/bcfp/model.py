"""Random forest classifier (bootstrap + random feature subsets + Gini CART).

Tree ``t`` draws its bootstrap sample and all feature subsets from the PCG32
stream ``(params.seed, t)``, so a forest is a pure function of
``(X, y, params)`` regardless of how the trees are scheduled.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from bcfp import _tree

FORMAT_VERSION = 1


class SingleClassError(ValueError):
    pass


class EmptyMatrixError(ValueError):
    pass


class WidthMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: str | int = "sqrt"
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def mtry(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.isqrt(n_features))
        if self.max_features in ("all", None):
            return n_features
        return max(1, min(int(self.max_features), n_features))


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def arrays(self):
        return (self.feature, self.threshold, self.left, self.right, self.value, self.n_samples)

    def predict(self, X) -> np.ndarray:
        return _tree.predict_tree(X, self.arrays)

    def __eq__(self, other):
        return isinstance(other, DecisionTree) and all(
            np.array_equal(a, b) for a, b in zip(self.arrays, other.arrays))


@dataclass
class Forest:
    trees: list[DecisionTree]
    params: ForestParams
    n_features: int
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "format": "bcfp-forest",
            "version": FORMAT_VERSION,
            "params": asdict(self.params),
            "n_features": self.n_features,
            "trees": [{name: arr.tolist() for name, arr in zip(
                ("feature", "threshold", "left", "right", "value", "n_samples"), t.arrays)}
                for t in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> "Forest":
        doc = json.loads(text)
        if doc.get("format") != "bcfp-forest" or doc.get("version") != FORMAT_VERSION:
            raise ValueError("unsupported forest serialization")
        trees = [DecisionTree(
            np.array(t["feature"], dtype=np.int64), np.array(t["threshold"], dtype=np.float64),
            np.array(t["left"], dtype=np.int64), np.array(t["right"], dtype=np.int64),
            np.array(t["value"], dtype=np.float64), np.array(t["n_samples"], dtype=np.int64))
            for t in doc["trees"]]
        return cls(trees, ForestParams(**doc["params"]), doc["n_features"])


def train_forest(X, y, params: ForestParams = ForestParams(), *, jit=None) -> Forest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyMatrixError(f"need a non-empty 2-D matrix, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y have different lengths")
    if X.shape[0] < 2 or np.unique(y).size < 2:
        raise SingleClassError("training data must contain both classes")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    mtry = params.mtry(X.shape[1])
    max_depth = -1 if params.max_depth is None else params.max_depth
    XT = np.ascontiguousarray(X.T)
    y = np.ascontiguousarray(y, dtype=np.int64)
    trees = [
        DecisionTree(*_tree.grow_tree(XT, y, mtry, params.min_samples_split, params.min_samples_leaf,
                                      max_depth, params.seed, t, jit=jit))
        for t in range(params.n_trees)
    ]
    return Forest(trees, params, X.shape[1])


def predict_proba(forest: Forest, X, *, jit=None) -> np.ndarray:
    """Mean over trees of the reached leaf's positive fraction."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise WidthMismatchError(f"expected {forest.n_features} columns, got {X.shape}")
    return _tree.predict_forest(X, [t.arrays for t in forest.trees], jit=jit)
