"""Seeded pseudo-random generator used everywhere in this package.

This is the 64-bit-state permuted congruential generator PCG32 (XSH-RR
variant): a 64-bit linear congruential step followed by an xorshift-high
and a random rotation producing 32-bit outputs.  It is written out here,
with no dependence on numpy's global state, so that every draw a problem
generator or solver makes is reproducible from a single integer seed.

Reproducibility contract: the same ``Pcg32(seed, stream)`` produces the
same sequence on every run of this build.  Cross-implementation agreement
is not a goal.
"""

from __future__ import annotations

import math

import numpy as np

_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1


class Pcg32:
    """PCG32 (XSH-RR 64/32) with a selectable stream.

    Parameters
    ----------
    seed : int
        Initial state contribution; any Python int.
    stream : int, optional
        Stream selector; distinct streams give statistically independent
        sequences for the same seed.
    """

    def __init__(self, seed: int, stream: int = 0):
        self._state = 0
        self._inc = ((int(stream) << 1) | 1) & _MASK64
        self._u32()
        self._state = (self._state + (int(seed) & _MASK64)) & _MASK64
        self._u32()
        self._cached_normal = None

    def _u32(self) -> int:
        old = self._state
        self._state = (old * _MULT + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def spawn(self, key: int) -> "Pcg32":
        """Derived generator on an independent stream; does not advance self."""
        return Pcg32(self._state ^ (0x9E3779B97F4A7C15 * (key + 1)), stream=key + 1)

    # -- scalar draws ----------------------------------------------------

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        hi = self._u32() >> 5   # 27 bits
        lo = self._u32() >> 6   # 26 bits
        return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * self.random()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection-free scaling (n <= 2**32)."""
        return int(self.random() * n)

    def normal(self) -> float:
        """Standard normal via Box-Muller; one value cached per pair."""
        if self._cached_normal is not None:
            z = self._cached_normal
            self._cached_normal = None
            return z
        u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        self._cached_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    # -- vector draws ----------------------------------------------------

    def _raw_states(self, count: int) -> np.ndarray:
        """Advance the LCG `count` times, returning the pre-update states."""
        out = np.empty(count, dtype=np.uint64)
        state, inc = self._state, self._inc
        for k in range(count):
            out[k] = state
            state = (state * _MULT + inc) & _MASK64
        self._state = state
        return out

    def _u32s(self, count: int) -> np.ndarray:
        old = self._raw_states(count)
        xorshifted = (((old >> np.uint64(18)) ^ old) >> np.uint64(27)).astype(np.uint32)
        rot = (old >> np.uint64(59)).astype(np.uint32)
        return (xorshifted >> rot) | (xorshifted << ((-rot) & np.uint32(31)))

    def uniforms(self, count: int) -> np.ndarray:
        """Vector of uniform doubles in [0, 1), same stream as random()."""
        u = self._u32s(2 * count).astype(np.float64)
        hi = np.floor(u[0::2] / 32.0)   # >> 5
        lo = np.floor(u[1::2] / 64.0)   # >> 6
        return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0)

    def normals(self, count: int) -> np.ndarray:
        """Vector of standard normals; same draw order as repeated normal()."""
        half = (count + 1) // 2
        u = self.uniforms(2 * half)
        u1 = u[0::2]
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        out = np.empty(2 * half)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:count]
