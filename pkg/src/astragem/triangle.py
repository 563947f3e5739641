"""Strict upper-triangle coordinates for symmetric zero-diagonal matrices.

The sample space of every score, noise draw and critic field is the strict
upper triangle (dimension n*(n-1)/2); full matrices are a mirrored
presentation of the same coordinates. NumPy-level helpers live here; the
differentiable equivalents are ``take_upper`` / ``mirror_upper`` in
:mod:`astragem.autodiff`.
"""

import numpy as np


def dim(n: int) -> int:
    """Coordinate count for an n-node graph."""
    return n * (n - 1) // 2


def upper_coords(a: np.ndarray) -> np.ndarray:
    """Strict upper triangle of the trailing (n, n) axes, row-major order."""
    n = a.shape[-1]
    iu, ju = np.triu_indices(n, k=1)
    return np.ascontiguousarray(a[..., iu, ju], dtype=np.float64)


def to_matrix(u: np.ndarray, n: int) -> np.ndarray:
    """Mirror coordinates into full symmetric matrices with zero diagonal."""
    u = np.asarray(u, dtype=np.float64)
    iu, ju = np.triu_indices(n, k=1)
    out = np.zeros(u.shape[:-1] + (n, n), dtype=np.float64)
    out[..., iu, ju] = u
    out[..., ju, iu] = u
    return out
