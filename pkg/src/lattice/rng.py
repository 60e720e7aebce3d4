"""
Per-Site Random Number Streams

Every lattice site owns an independent xorshift64* stream whose initial state
is derived from (seed, global site index) with splitmix64. A site's stream is
therefore identical no matter how many ranks the lattice is split over or
which rank hosts the site.
"""

import math
from typing import Optional

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D
TWO_POW_MINUS_53 = 1.0 / (1 << 53)


def splitmix64(x: int) -> int:
    """One splitmix64 output for input state ``x``."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """
    xorshift64* generator with a cached Box-Muller spare.

    The state is never zero.
    """

    __slots__ = ("_state", "_spare")

    def __init__(self, state: int):
        state &= MASK64
        self._state = state if state != 0 else 1
        self._spare: Optional[float] = None

    @classmethod
    def for_site(cls, seed: int, index: int) -> "RngStream":
        """Stream for global site ``index`` of a lattice seeded with ``seed``."""
        mixed = (seed & MASK64) ^ ((GOLDEN_GAMMA * (index + 1)) & MASK64)
        return cls(splitmix64(mixed))

    @property
    def state(self) -> int:
        return self._state

    def uniform64(self) -> int:
        s = self._state
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        self._state = s
        return (s * XORSHIFT_MULTIPLIER) & MASK64

    def uniform(self) -> float:
        """Real number in [0, 1) with 53 random bits."""
        return (self.uniform64() >> 11) * TWO_POW_MINUS_53

    def gaussian(self) -> float:
        """Standard normal deviate (Box-Muller, cosine branch first)."""
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        u1 = self.uniform()
        while u1 == 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)
