"""Block structure, weighted norms and the random block sampler.

Vectors live in R^n split into N contiguous blocks; a block is an index
range, never a stored selector matrix.  Per-block norms are Euclidean
throughout the package.
"""

from __future__ import annotations

import numpy as np


class ConfigurationError(ValueError):
    """A parameter combination the method's guarantees exclude (e.g. gamma*L >= 1)."""


class InfeasibleError(ValueError):
    """A projection target set is empty."""


class NumericalFailure(RuntimeError):
    """A solver or subproblem produced non-finite or non-stationary output.

    Carries a ``diagnostics`` dict with the offending iterate snapshot.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class BlockPartition:
    """Decomposition of R^n into N contiguous blocks of sizes n_i >= 1."""

    def __init__(self, sizes):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) == 0:
            raise ValueError("partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        self.sizes = sizes
        self.N = len(sizes)
        self.n = sum(sizes)
        offsets = np.concatenate(([0], np.cumsum(sizes)))
        self.offsets = tuple(int(o) for o in offsets[:-1])
        self._slices = tuple(
            slice(int(offsets[i]), int(offsets[i + 1])) for i in range(self.N)
        )
        self.is_scalar = self.n == self.N

    @classmethod
    def scalar(cls, n: int) -> "BlockPartition":
        """n blocks of size one (U_i = e_i)."""
        return cls((1,) * int(n))

    @classmethod
    def uniform(cls, n: int, block_size: int) -> "BlockPartition":
        if n % block_size != 0:
            raise ValueError("block_size must divide n")
        return cls((block_size,) * (n // block_size))

    def slice(self, i: int) -> slice:
        return self._slices[i]

    def take(self, x: np.ndarray, i: int) -> np.ndarray:
        """Block i of x (a view, in matrix terms U_i^T x)."""
        return x[self._slices[i]]

    def embed(self, i: int, h) -> np.ndarray:
        """U_i h: an n-vector that is h on block i and zero elsewhere."""
        out = np.zeros(self.n)
        out[self._slices[i]] = h
        return out

    def __repr__(self):
        return f"BlockPartition(N={self.N}, n={self.n})"


class LipschitzProfile:
    """Per-block constants L_i > 0 together with a sampling/norm exponent alpha.

    S_alpha = sum_i L_i^alpha; sampling probabilities are L_i^alpha / S_alpha.
    alpha is restricted to [0, 1], the only range the solvers use.
    """

    def __init__(self, values, alpha: float):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not np.all(values > 0) or not np.all(np.isfinite(values)):
            raise ValueError("all L_i must be strictly positive and finite")
        alpha = float(alpha)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.values = values
        self.alpha = alpha
        self._weights = values**alpha
        self.s_alpha = float(self._weights.sum())
        if not np.isfinite(self.s_alpha) or self.s_alpha <= 0:
            raise ValueError("S_alpha must be finite and positive")
        self._cumulative = None

    @property
    def N(self) -> int:
        return self.values.size

    def with_alpha(self, alpha: float) -> "LipschitzProfile":
        return LipschitzProfile(self.values, alpha)

    def probabilities(self) -> np.ndarray:
        return self._weights / self.s_alpha

    def cumulative(self) -> np.ndarray:
        """Cumulative sampling distribution, cached; last entry pinned to 1."""
        if self._cumulative is None:
            cum = np.cumsum(self.probabilities())
            cum[-1] = 1.0
            self._cumulative = cum
        return self._cumulative


def weighted_norm(x, profile: LipschitzProfile, partition: BlockPartition) -> float:
    """sqrt(sum_i L_i^alpha * ||x^(i)||^2); alpha = 0 gives the Euclidean norm."""
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({partition.n},)")
    if profile.N != partition.N:
        raise ValueError("profile and partition disagree on the block count")
    w = np.repeat(profile._weights, partition.sizes)
    return float(np.sqrt(np.dot(w, x * x)))


def dual_weighted_norm(g, profile: LipschitzProfile, partition: BlockPartition) -> float:
    """Dual of weighted_norm: sqrt(sum_i L_i^(-alpha) * ||g^(i)||^2)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (partition.n,):
        raise ValueError(f"g has shape {g.shape}, expected ({partition.n},)")
    if profile.N != partition.N:
        raise ValueError("profile and partition disagree on the block count")
    w = np.repeat(profile.values ** (-profile.alpha), partition.sizes)
    return float(np.sqrt(np.dot(w, g * g)))


def sampler_draw(profile: LipschitzProfile, rng) -> int:
    """Draw a block index with probability L_i^alpha / S_alpha.

    Inverse-CDF over the profile's precomputed cumulative sums; deterministic
    given the generator's seed.
    """
    cum = profile.cumulative()
    i = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(i, profile.N - 1)


def sampler_draw_many(profile: LipschitzProfile, rng, count: int) -> np.ndarray:
    """Vector of `count` draws; consumes the same stream as repeated draws."""
    cum = profile.cumulative()
    u = rng.uniforms(count)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, profile.N - 1)
