"""Pooling of key multisets into count vectors and assembly of feature matrices.

Two poolings are available per block: ``folded`` (key mod D) and
``sortslice`` (top-K training keys by molecule frequency, optionally with one
out-of-vocabulary coordinate collecting everything else).
"""
from __future__ import annotations

import csv
import struct
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from bcfp.fingerprint import KeyTable

KINDS = ("ecfp", "bcfp", "concat", "hybrid")
POOLINGS = ("folded", "sortslice")
MAGIC = b"BCFPMAT1"


class ZeroDimensionError(ValueError):
    pass


class SchemeMismatchWarning(UserWarning):
    """Hybrid at radius 0 cannot use radius -1 for BCFP; concat(0) is used instead."""


def fold_counts(keys: Mapping[int, int], dim: int) -> np.ndarray:
    if dim < 1:
        raise ZeroDimensionError(f"fold dimension must be >= 1, got {dim}")
    out = np.zeros(dim, dtype=np.int64)
    for key, count in keys.items():
        out[key % dim] += count
    return out


@dataclass(frozen=True)
class SortSliceVocabulary:
    retained: tuple[int, ...]
    oov_enabled: bool
    fit_stats: dict = field(default_factory=dict, compare=False)
    fit_indices: Optional[frozenset] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return len(self.retained) + int(self.oov_enabled)

    @property
    def index(self) -> dict[int, int]:
        return {k: i for i, k in enumerate(self.retained)}


def fit_sortslice(train: Sequence[Mapping[int, int]], k: int, oov: bool = False,
                  fit_indices: Optional[Iterable[int]] = None) -> SortSliceVocabulary:
    """Keep the ``k`` keys present in the most training molecules.

    Frequency counts presence per molecule, not summed counts.  Ties go to the
    smaller key value.
    """
    if not train:
        raise ValueError("fit_sortslice needs at least one training multiset")
    if k < 1:
        raise ZeroDimensionError(f"slice size must be >= 1, got {k}")
    freq: Counter = Counter()
    for keys in train:
        freq.update(keys.keys())
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return SortSliceVocabulary(
        retained=tuple(key for key, _ in ranked),
        oov_enabled=oov,
        fit_stats={key: f for key, f in ranked},
        fit_indices=frozenset(fit_indices) if fit_indices is not None else None,
    )


def transform_sortslice(keys: Mapping[int, int], vocab: SortSliceVocabulary,
                        index: Optional[dict] = None) -> np.ndarray:
    index = vocab.index if index is None else index
    out = np.zeros(vocab.size, dtype=np.int64)
    oov = 0
    for key, count in keys.items():
        i = index.get(key)
        if i is None:
            oov += count
        else:
            out[i] = count
    if vocab.oov_enabled:
        out[-1] = oov
    return out


@dataclass(frozen=True)
class FeatureScheme:
    kind: str
    radius: int
    pooling: str = "folded"
    dim: int = 2048
    k: int = 1024
    oov: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}; expected one of {POOLINGS}")
        if not 0 <= self.radius <= 3:
            raise ValueError(f"radius must be in 0..3, got {self.radius}")
        if self.oov and self.pooling != "sortslice":
            raise ValueError("the OOV bucket only applies to sortslice pooling")

    @property
    def config_id(self) -> str:
        tag = "fold" if self.pooling == "folded" else ("ss_oov" if self.oov else "ss")
        return f"{self.kind}_r{self.radius}_{tag}"

    def blocks(self) -> list[tuple[str, int]]:
        """``(fingerprint, radius)`` per column block, in order."""
        r = self.radius
        if self.kind in ("ecfp", "bcfp"):
            return [(self.kind, r)]
        if self.kind == "concat" or r == 0:
            return [("ecfp", r), ("bcfp", r)]
        return [("ecfp", r), ("bcfp", r - 1)]


def hybrid_scheme(radius: int, bcfp_radius: int, **kwargs) -> FeatureScheme:
    """Hybrid scheme with an explicit BCFP radius; ``-1`` is normalized to concat(0)."""
    if bcfp_radius != radius - 1 and not (radius == 0 and bcfp_radius == 0):
        raise ValueError(f"hybrid pairs ECFP({radius}) with BCFP({radius - 1}), not BCFP({bcfp_radius})")
    if bcfp_radius < 0:
        warnings.warn("hybrid at radius 0 has no BCFP(-1); using concat at radius 0",
                      SchemeMismatchWarning, stacklevel=2)
    return FeatureScheme("hybrid", radius, **kwargs)


@dataclass(frozen=True)
class Block:
    fingerprint: str
    radius: int
    pooling: str
    start: int
    stop: int
    oov: bool = False

    @property
    def label(self) -> str:
        return f"{self.fingerprint}{self.radius}_{self.pooling}{'_oov' if self.oov else ''}"


@dataclass
class FeatureMatrix:
    X: np.ndarray
    labels: np.ndarray
    blocks: list[Block]
    vocabularies: list[Optional[SortSliceVocabulary]] = field(default_factory=list)

    def __post_init__(self):
        if self.X.shape[0] != len(self.labels):
            raise ValueError("row count and label count differ")

    @property
    def shape(self):
        return self.X.shape

    def column_names(self) -> list[str]:
        names = []
        for blk in self.blocks:
            width = blk.stop - blk.start
            for j in range(width):
                if blk.oov and j == width - 1:
                    names.append(f"{blk.label}:oov")
                else:
                    names.append(f"{blk.label}:{j}")
        return names


def build_features(table: KeyTable, labels: Sequence[int], scheme: FeatureScheme,
                   train_indices: Optional[Sequence[int]] = None) -> FeatureMatrix:
    """Assemble the feature matrix for every molecule in ``table``.

    Sort&Slice vocabularies are fitted on ``train_indices`` only (required for
    that pooling); each block gets its own vocabulary.
    """
    if scheme.pooling == "sortslice" and train_indices is None:
        raise ValueError("sortslice pooling needs train_indices to fit the vocabulary")
    columns, blocks, vocabs = [], [], []
    start = 0
    for fp, r in scheme.blocks():
        multisets = table.multisets(fp, r)
        if scheme.pooling == "folded":
            mat = np.zeros((table.n, scheme.dim), dtype=np.int64)
            for i, keys in enumerate(multisets):
                for key, count in keys.items():
                    mat[i, key % scheme.dim] += count
            vocab = None
        else:
            train = [multisets[i] for i in train_indices]
            vocab = fit_sortslice(train, scheme.k, scheme.oov, fit_indices=train_indices)
            index = vocab.index
            mat = np.stack([transform_sortslice(keys, vocab, index) for keys in multisets]) \
                if table.n else np.zeros((0, vocab.size), dtype=np.int64)
        columns.append(mat)
        blocks.append(Block(fp, r, scheme.pooling, start, start + mat.shape[1], scheme.oov))
        vocabs.append(vocab)
        start += mat.shape[1]
    X = np.hstack(columns) if columns else np.zeros((table.n, 0), dtype=np.int64)
    return FeatureMatrix(X, np.asarray(labels, dtype=np.int64), blocks, vocabs)


# ---------------------------------------------------------------------------
# export

def write_csv(fm: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", *fm.column_names()])
        for label, row in zip(fm.labels, fm.X):
            w.writerow([int(label), *(int(v) for v in row)])


def write_binary(X: np.ndarray, path) -> None:
    """``BCFPMAT1`` + uint64 rows + uint64 cols (little-endian) + row-major uint32 counts."""
    X = np.asarray(X)
    if X.size and (X.min() < 0 or X.max() > 0xFFFFFFFF):
        raise ValueError("counts do not fit in 32 bits")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", X.shape[0], X.shape[1]))
        fh.write(np.ascontiguousarray(X, dtype="<u4").tobytes())


def read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a BCFPMAT1 file")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<u4")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} counts, found {data.size}")
    return data.reshape(rows, cols).astype(np.int64)
