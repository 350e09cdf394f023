"""Stratified holdout and repeated stratified k-fold splits.

Splits depend only on ``(labels, seed)``.  Classes are visited in ascending
label order and shuffled with one PCG32 stream per seed, so every feature
configuration evaluated with the same seed sees the same partition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from bcfp.rng import Pcg32


class DegenerateSplitError(ValueError):
    pass


class TooFewPerClassError(ValueError):
    pass


def _class_members(labels) -> dict[int, list[int]]:
    y = np.asarray(labels)
    return {int(c): np.nonzero(y == c)[0].tolist() for c in np.unique(y)}


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_holdout(labels, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    members = _class_members(labels)
    if len(members) < 2:
        raise DegenerateSplitError("both classes must be present")
    rng = Pcg32(seed, 0)
    train, test = [], []
    for c in sorted(members):
        idx = members[c]
        rng.shuffle(idx)
        n_test = _round_half_up(len(idx) * test_fraction)
        if n_test == 0 or n_test == len(idx):
            raise DegenerateSplitError(f"class {c} ({len(idx)} rows) would have an empty train or test side")
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def stratified_kfold(labels, k: int, seed: int | Sequence[int], repeats: int = 1) -> list[tuple[np.ndarray, np.ndarray]]:
    """``k * repeats`` folds; repeat ``r`` uses ``seed[r]`` (or ``seed + r`` for a scalar).

    Each class is shuffled and dealt round-robin over the folds; the dealing
    position carries over between classes so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    seeds = list(seed) if isinstance(seed, (list, tuple, np.ndarray)) else [int(seed) + r for r in range(repeats)]
    if len(seeds) != repeats:
        raise ValueError(f"{repeats} repeats need {repeats} seeds, got {len(seeds)}")
    members = _class_members(labels)
    for c, idx in members.items():
        if len(idx) < k:
            raise TooFewPerClassError(f"class {c} has {len(idx)} members, fewer than k={k}")
    n = len(labels)
    folds = []
    for s in seeds:
        rng = Pcg32(s, 0)
        assign = np.empty(n, dtype=np.int64)
        pos = 0
        for c in sorted(members):
            idx = list(members[c])
            rng.shuffle(idx)
            for i in idx:
                assign[i] = pos % k
                pos += 1
        all_idx = np.arange(n)
        for f in range(k):
            folds.append((all_idx[assign != f], all_idx[assign == f]))
    return folds


@dataclass(frozen=True)
class SplitPlan:
    kind: str  # "holdout" or "kfold"
    seeds: tuple[int, ...]
    test_fraction: float = 0.2
    k: int = 5

    def __post_init__(self):
        if self.kind not in ("holdout", "kfold"):
            raise ValueError(f"unknown split kind {self.kind!r}")

    @property
    def repeats(self) -> int:
        return len(self.seeds)

    def splits(self, labels) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """``(split_id, train, test)`` for every split of the plan."""
        out = []
        if self.kind == "holdout":
            for s in self.seeds:
                tr, te = stratified_holdout(labels, self.test_fraction, s)
                out.append((f"seed{s}", tr, te))
        else:
            folds = stratified_kfold(labels, self.k, list(self.seeds), repeats=len(self.seeds))
            for j, (tr, te) in enumerate(folds):
                out.append((f"rep{j // self.k}_fold{j % self.k}", tr, te))
        return out
