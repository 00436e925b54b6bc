"""Small self-contained PRNG for bit-stable shuffles and fold splits.

Platform RNGs (``random``, ``numpy.random``) are stable in practice but not
contractually pinned across versions, so everything that must reproduce
byte-identically (fold plans, epoch sample orders, derived seeds) runs off
this splitmix64 implementation instead.  Constants are the canonical ones
from Steele, Lea & Flood's SplittableRandom:

    gamma  = 0x9E3779B97F4A7C15   (2^64 / golden ratio)
    mix    = murmur3-style finalizer with multipliers
             0xBF58476D1CE4E5B9 and 0x94D049BB133111EB
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK
    z = (z ^ (z >> 27)) * _MIX2 & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed: element ``index`` of the splitmix64 stream.

    Used to give each fold / grid cell / parallel job its own independent
    stream regardless of scheduling order.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return _mix64((seed + (index + 1) * _GAMMA) & _MASK)


class SplitMix64:
    """splitmix64 stream with helpers for unbiased ints and shuffles."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix64(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        order = list(range(n))
        self.shuffle(order)
        return order
