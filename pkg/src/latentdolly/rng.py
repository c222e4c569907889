"""Deterministic, splittable random number generation.

Built on numpy's Philox counter-based bit generator: the stream of a
given (seed, stream) pair is identical on every platform and independent
of how work is scheduled, so parallel evaluation order can never change
results.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Rng:
    """A (seed, stream) pair naming one reproducible random stream.

    ``stream`` is usually derived from a purpose string via :meth:`split`,
    so unrelated consumers of the same seed never share draws.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def split(self, purpose: str) -> "Rng":
        """Derive a child stream from a purpose label."""
        h = zlib.crc32(purpose.encode("utf-8")) & 0xFFFFFFFF
        child = ((self.stream << 17) ^ (self.stream >> 3) ^ (h * 0x9E3779B97F4A7C15)) & _MASK64
        return Rng(self.seed, child)

    def with_stream(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator; same (seed, stream) -> same draws, always."""
        key = (self.stream << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))
