"""Closed-form score of a Gaussian kernel-density estimate.

For reference points u_1..u_M and bandwidth h, the mixture
log p(x) = log sum_n exp(-|x - u_n|^2 / (2 h^2)) + const has score

    d/dx log p(x) = sum_n w_n(x) (u_n - x) / h^2,
    w_n(x) = softmax_n(-|x - u_n|^2 / (2 h^2)),

computed with a log-sum-exp shift for stability. This is the score the
critic is regularized against, with bandwidth tied to the noise level.
"""

from __future__ import annotations

import numpy as np

from astragem.errors import DataError


def kde_score(x: np.ndarray, refs: np.ndarray, h: float) -> np.ndarray:
    """Score of the KDE at point(s) ``x``.

    ``x``: (..., d) query coordinates; ``refs``: (M, d) reference
    coordinates with the same dimension. Returns an array shaped like ``x``.
    """
    refs = np.asarray(refs, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if refs.ndim != 2 or refs.shape[0] == 0:
        raise DataError("kde_score needs a nonempty (M, d) reference set")
    if x.shape[-1] != refs.shape[1]:
        raise DataError(
            f"kde_score dimension mismatch: x has d={x.shape[-1]}, refs d={refs.shape[1]}"
        )
    h = float(h)
    if h <= 0:
        raise DataError("kde bandwidth must be positive")
    diffs = refs - x[..., None, :]  # (..., M, d)
    logw = -np.sum(diffs * diffs, axis=-1) / (2.0 * h * h)  # (..., M)
    logw = logw - logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=-1, keepdims=True)
    return np.einsum("...m,...md->...d", w, diffs) / (h * h)


def kde_log_density(x: np.ndarray, refs: np.ndarray, h: float) -> np.ndarray:
    """Unnormalized log KDE density (finite-difference oracle for the score)."""
    refs = np.asarray(refs, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    diffs = refs - x[..., None, :]
    logk = -np.sum(diffs * diffs, axis=-1) / (2.0 * float(h) ** 2)
    m = logk.max(axis=-1)
    return m + np.log(np.exp(logk - m[..., None]).sum(axis=-1))
