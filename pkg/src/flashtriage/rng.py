"""SplitMix64, the fixture generator's only source of randomness.

Chosen because it is tiny, fully specified and counter based, so other
implementations can reproduce fixtures bit for bit:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)            (all arithmetic mod 2**64)

Byte streams are consecutive outputs serialised little-endian, with the
last word truncated when the length is not a multiple of 8.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
STREAM_KEY = 0xD6E8FEB86659FD93
MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Independent child seed for numbered sub-stream ``stream``."""
    return mix64((seed ^ ((stream + 1) * STREAM_KEY)) & MASK64)


class SplitMix64:
    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection, consuming whole 64-bit words."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randrange(self, lo: int, hi: int) -> int:
        return lo + self.randbelow(hi - lo)

    def sample(self, population: int, k: int) -> list[int]:
        """k distinct values from range(population), partial Fisher-Yates order."""
        if not 0 <= k <= population:
            raise ValueError("sample larger than population")
        swapped: dict[int, int] = {}
        out = []
        for i in range(k):
            j = i + self.randbelow(population - i)
            vi, vj = swapped.get(i, i), swapped.get(j, j)
            swapped[j] = vi
            out.append(vj)
        return out

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def random_bytes(self, n: int) -> bytes:
        if n <= 0:
            return b""
        words = (n + 7) // 8
        with np.errstate(over="ignore"):
            counters = np.arange(1, words + 1, dtype=np.uint64) * np.uint64(GAMMA)
            z = counters + np.uint64(self.state)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + words * GAMMA) & MASK64
        return z.astype("<u8").tobytes()[:n]
