"""Seedable 64-bit RNG used by the simulators.

xoshiro256++ (period 2^256 - 1) seeded through splitmix64.  The compiled
kernels implement the identical generator, so a given seed produces the same
event stream on either backend.  Replica r of a batch uses
``master_seed XOR splitmix64(r)``.
"""
from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
_DOUBLE_SCALE = 1.0 / 9007199254740992.0  # 2^-53


def splitmix64(x: int) -> int:
    """One splitmix64 scramble of ``x`` (64-bit)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replica_seed(master_seed: int, replica: int) -> int:
    """Derive the per-replica seed: master XOR splitmix64(replica index)."""
    return (master_seed & MASK64) ^ splitmix64(replica & MASK64)


def seed_state(seed: int) -> tuple[int, int, int, int]:
    """Expand a 64-bit seed into a nonzero xoshiro256 state via splitmix64."""
    x = seed & MASK64
    s = []
    for _ in range(4):
        x = (x + 0x9E3779B97F4A7C15) & MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        s.append(z ^ (z >> 31))
    if not any(s):
        s[0] = 0x9E3779B97F4A7C15
    return s[0], s[1], s[2], s[3]


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256++ with the exact update used by the compiled kernels."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        self.s0, self.s1, self.s2, self.s3 = seed_state(seed)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def exponential(self, rate: float) -> float:
        """Exponential holding time with the given total rate."""
        return -math.log(1.0 - self.random()) / rate

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) (Lemire multiply-shift)."""
        return (self.next_u64() * n) >> 64
