"""Gaussian corruption of adjacency matrices at a ladder of noise levels.

Noise is drawn per strict-upper-triangle entry and mirrored, so sigma is the
per-coordinate standard deviation in the sample space the scores live in,
and the corrupted matrix stays exactly symmetric with zero diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from astragem import triangle
from astragem.errors import DataError


@dataclass(frozen=True)
class NoiseLadder:
    """Strictly decreasing positive noise standard deviations."""

    sigmas: tuple[float, ...] = (1.0, 0.5, 0.25, 0.1)

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        object.__setattr__(self, "sigmas", sig)
        if len(sig) < 1:
            raise DataError("noise ladder must have at least one level")
        if any(s <= 0 for s in sig):
            raise DataError("noise levels must be positive")
        if any(a <= b for a, b in zip(sig, sig[1:])):
            raise DataError("noise levels must be strictly decreasing")

    def __len__(self):
        return len(self.sigmas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=np.float64)


@dataclass(frozen=True)
class NoisyAdjacency:
    """A corrupted adjacency matrix tagged with its noise-level index."""

    matrix: np.ndarray
    level: int
    sigma: float

    @property
    def n(self) -> int:
        return self.matrix.shape[-1]

    def coords(self) -> np.ndarray:
        return triangle.upper_coords(self.matrix)


def perturb(a: np.ndarray, ladder: NoiseLadder, level: int, rng) -> NoisyAdjacency:
    """Corrupt a binary adjacency matrix at one ladder level."""
    if not 0 <= level < len(ladder):
        raise DataError(f"noise level {level} outside ladder of size {len(ladder)}")
    sigma = ladder.sigmas[level]
    if sigma <= 0:
        raise DataError("noise sigma must be positive")
    n = a.shape[-1]
    u = triangle.upper_coords(np.asarray(a, dtype=np.float64))
    u = u + sigma * rng.standard_normal(u.shape)
    return NoisyAdjacency(triangle.to_matrix(u, n), level, sigma)


def perturb_coords(u0: np.ndarray, sigmas: np.ndarray, rng) -> np.ndarray:
    """All ladder levels at once: (batch, d) clean coords -> (k, batch, d)."""
    noise = rng.standard_normal((len(sigmas),) + u0.shape)
    return u0[None] + sigmas[:, None, None] * noise
