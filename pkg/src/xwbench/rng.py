"""Seedable 64-bit random source used by the data generator.

The stream is splitmix64 (the SplittableRandom step function as published
by Vigna, http://prng.di.unimi.it/splitmix64.c).  The algorithm identity
matters: equal seeds must give byte-identical warehouses, and the sequence
must be reproducible outside this codebase from the published definition.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

T = TypeVar("T")


class SplitMix64:
    """splitmix64 stream with helpers for bounded draws.

    Bounded draws use the multiply-shift reduction; its bias is below
    n/2**64, invisible for the pool sizes used here (< 2**14).
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._state = seed

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"below() needs a positive bound, got {n}")
        return (self.next_u64() * n) >> 64

    def flip(self) -> bool:
        """Fair coin; one draw."""
        return self.below(2) == 1

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k distinct elements via a partial Fisher-Yates shuffle."""
        pool = list(seq)
        if k > len(pool):
            raise ValueError(f"cannot sample {k} from {len(pool)} elements")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
