# ymlab/rng.py
"""SplitMix64 generator shared by every seeded command.

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

Uniform doubles take the top 53 bits; normals use Box-Muller on
consecutive pairs (cosine branch first).
"""
from __future__ import annotations
from typing import Tuple, Union

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1

Size = Union[int, Tuple[int, ...], None]


def _count(size: Size) -> int:
    if size is None:
        return 1
    return int(np.prod(size)) if isinstance(size, tuple) else int(size)


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        return int(self.integers(1)[0])

    def integers(self, n: int) -> np.ndarray:
        """Next `n` raw outputs as uint64."""
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN) & MASK
        return z

    def random(self, size: Size = None):
        u = (self.integers(_count(size)) >> np.uint64(11)).astype(float) * 2.0 ** -53
        return float(u[0]) if size is None else u.reshape(size)

    def standard_normal(self, size: Size = None):
        n = _count(size)
        u = self.random(2 * ((n + 1) // 2)).reshape(-1, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1).ravel()[:n]
        return float(z[0]) if size is None else z.reshape(size)
