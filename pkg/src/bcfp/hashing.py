"""FNV-1a 64-bit hashing of tagged integer tuples.

A tuple ``(v0, v1, ...)`` with tags ``(t0, t1, ...)`` is serialized as
``t0 | le64(v0) | t1 | le64(v1) | ...``: one tag byte, then the value as an
8-byte little-endian two's-complement integer.  Batches of tuples are hashed
by :func:`hash_rows`, which runs either the numba kernel or a numpy version
that folds every row in lockstep.
"""
from typing import Iterable, Sequence

import numpy as np

from bcfp._jit import JIT_ENABLED, njit

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MASK64 = (1 << 64) - 1


def hash64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def encode_fields(fields: Iterable[tuple[int, int]]) -> bytes:
    """Serialize ``(tag, value)`` pairs to the canonical byte layout."""
    out = bytearray()
    for tag, value in fields:
        out.append(tag & 0xFF)
        out += (int(value) & MASK64).to_bytes(8, "little")
    return bytes(out)


def hash_fields(fields: Iterable[tuple[int, int]]) -> int:
    return hash64(encode_fields(fields))


@njit
def _hash_rows_numba(tags, values, offsets):
    n = offsets.shape[0] - 1
    out = np.empty(n, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    for i in range(n):
        h = np.uint64(FNV_OFFSET)
        for j in range(offsets[i], offsets[i + 1]):
            h = (h ^ np.uint64(tags[j])) * prime
            v = values[j]
            for _ in range(8):
                h = (h ^ (v & np.uint64(0xFF))) * prime
                v = v >> np.uint64(8)
        out[i] = h
    return out


def _hash_rows_numpy(tags, values, offsets):
    n = offsets.shape[0] - 1
    lengths = np.diff(offsets)
    h = np.full(n, FNV_OFFSET, dtype=np.uint64)
    if n == 0 or lengths.max(initial=0) == 0:
        return h
    prime = np.uint64(FNV_PRIME)
    with np.errstate(over="ignore"):
        for j in range(int(lengths.max())):
            rows = np.nonzero(lengths > j)[0]
            pos = offsets[rows] + j
            hr = (h[rows] ^ tags[pos].astype(np.uint64)) * prime
            v = values[pos]
            for _ in range(8):
                hr = (hr ^ (v & np.uint64(0xFF))) * prime
                v = v >> np.uint64(8)
            h[rows] = hr
    return h


def hash_rows(tags, values, offsets, *, jit=None) -> np.ndarray:
    """Hash the tagged tuples ``tags/values[offsets[i]:offsets[i+1]]`` for every row ``i``."""
    tags = np.ascontiguousarray(tags, dtype=np.uint8)
    values = np.ascontiguousarray(values, dtype=np.uint64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    use_jit = JIT_ENABLED if jit is None else jit
    if use_jit:
        return _hash_rows_numba(tags, values, offsets)
    return _hash_rows_numpy(tags, values, offsets)


class RowBuilder:
    """Accumulates tagged tuples for one :func:`hash_rows` call."""

    __slots__ = ("tags", "values", "offsets")

    def __init__(self):
        self.tags: list[int] = []
        self.values: list[int] = []
        self.offsets: list[int] = [0]

    def add(self, fields: Sequence[tuple[int, int]]) -> None:
        for tag, value in fields:
            self.tags.append(tag)
            self.values.append(int(value) & MASK64)
        self.offsets.append(len(self.tags))

    def __len__(self):
        return len(self.offsets) - 1

    def hash(self) -> list[int]:
        if len(self) == 0:
            return []
        out = hash_rows(
            np.array(self.tags, dtype=np.uint8),
            np.array(self.values, dtype=np.uint64),
            np.array(self.offsets, dtype=np.int64),
        )
        return [int(x) for x in out]
