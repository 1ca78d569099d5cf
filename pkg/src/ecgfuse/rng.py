"""Deterministic, portable random number generation.

Every stochastic step in this package (row/column subsampling, stratified
shuffles, label shuffles, Gaussian draws) flows through one generator:
xoshiro256** with its 256-bit state filled by splitmix64 from a single
64-bit seed.  Both algorithms are integer-only and published with reference
C implementations, so the exact draw sequence can be reproduced in any
language.

Bounded integers are produced as ``next_u64() % bound``; the modulo bias is
irrelevant at the ranges used here and the rule is trivially portable.
Uniform doubles take the top 53 bits of an output word.  Normal deviates
use the Box-Muller transform on uniform pairs (batched through numpy, so
they are reproducible per build rather than bit-portable across libms).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_INV53 = 2.0 ** -53


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** seeded via splitmix64 from one 64-bit integer."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        sm = seed
        sm, self._s0 = _splitmix64(sm)
        sm, self._s1 = _splitmix64(sm)
        sm, self._s2 = _splitmix64(sm)
        sm, self._s3 = _splitmix64(sm)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def next_below(self, bound: int) -> int:
        """Integer in [0, bound), consuming exactly one output word."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits of one word."""
        return (self.next_u64() >> 11) * _INV53

    def uniforms(self, count: int) -> np.ndarray:
        return np.array([(self.next_u64() >> 11) * _INV53 for _ in range(count)],
                        dtype=np.float64)

    def normals(self, count: int) -> np.ndarray:
        """``count`` standard normal deviates via Box-Muller pairs.

        Consumes 2*ceil(count/2) output words; the first uniform of each
        pair is mapped to (0, 1] so the log is always finite.
        """
        pairs = (count + 1) // 2
        words = np.array([self.next_u64() for _ in range(2 * pairs)], dtype=np.uint64)
        u = (words >> np.uint64(11)).astype(np.float64)
        u1 = (u[0::2] + 1.0) * _INV53  # (0, 1]
        u2 = u[1::2] * _INV53          # [0, 1)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]

    def shuffle(self, items: list | np.ndarray) -> None:
        """In-place Fisher-Yates shuffle (forward variant)."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.next_below(n - i)
            items[i], items[j] = items[j], items[i]

    def choose(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from range(n), ascending.

        Selection is the k-prefix of a forward Fisher-Yates shuffle (the
        partial shuffle yields the identical prefix while consuming only
        min(k, n-1) words), then sorted.
        """
        if not 0 < k <= n:
            raise ValueError("need 0 < k <= n")
        if k == n:
            return np.arange(n, dtype=np.int64)
        items = list(range(n))
        for i in range(min(k, n - 1)):
            j = i + self.next_below(n - i)
            items[i], items[j] = items[j], items[i]
        picked = np.array(items[:k], dtype=np.int64)
        picked.sort()
        return picked
