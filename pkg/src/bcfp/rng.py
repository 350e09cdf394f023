"""PCG32 (XSH-RR 64/32) random stream.

Every random draw in the package goes through this generator so results never
depend on numpy's or Python's RNG versions.  A stream is identified by
``(seed, stream)``; seeding follows the reference ``pcg32_srandom_r``.
"""
import numpy as np

from bcfp._jit import njit

MULT = 6364136223846793005
MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1


class Pcg32:
    """Pure-Python PCG32 generator."""

    __slots__ = ("state", "inc")

    def __init__(self, seed: int, stream: int = 0):
        self.state = 0
        self.inc = ((int(stream) << 1) | 1) & MASK64
        self.next_u32()
        self.state = (self.state + (int(seed) & MASK64)) & MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * MULT + self.inc) & MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32

    def bounded(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection (reference algorithm)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 32) - bound) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, walking from the end."""
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]

    def to_array(self) -> np.ndarray:
        return np.array([self.state, self.inc], dtype=np.uint64)


# State-array variants used inside compiled kernels: ``st = [state, inc]``.

@njit
def pcg32_init(seed, stream):
    st = np.zeros(2, dtype=np.uint64)
    st[1] = (np.uint64(stream) << np.uint64(1)) | np.uint64(1)
    pcg32_next(st)
    st[0] = st[0] + np.uint64(seed)
    pcg32_next(st)
    return st


@njit
def pcg32_next(st):
    old = st[0]
    st[0] = old * np.uint64(MULT) + st[1]
    xorshifted = np.uint32(((old >> np.uint64(18)) ^ old) >> np.uint64(27))
    rot = np.uint32(old >> np.uint64(59))
    return np.uint32((xorshifted >> rot) | (xorshifted << ((np.uint32(32) - rot) & np.uint32(31))))


@njit
def pcg32_bounded(st, bound):
    b = np.uint32(bound)
    threshold = np.uint32((np.uint64(1 << 32) - np.uint64(b)) % np.uint64(b))
    while True:
        r = pcg32_next(st)
        if r >= threshold:
            return np.int64(r % b)
