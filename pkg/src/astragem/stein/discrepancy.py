"""The parametric Stein discrepancy term.

For a sample z with model score s(z) and a critic vector field f, the
summand is

    s(z)^T f(z) + tr(df/dz),

evaluated in upper-triangle coordinates for graphs (or any flat coordinate
space). The trace is the expensive part: exact mode runs d directional
derivatives (vectorized in probe chunks), Hutchinson mode uses Rademacher
probes. Both stay differentiable in the critic parameters, which the
adversarial updates require.
"""

from __future__ import annotations

import numpy as np

from astragem import autodiff as ad
from astragem.errors import ShapeError


def _as_tensor(x):
    return x if isinstance(x, ad.Tensor) else ad.tensor(x)


def stein_term(z, score, field, trace_mode="exact", n_probes=64, rng=None):
    """score^T f(z) + tr(df/dz) for a single sample.

    ``z`` and ``score`` are coordinate vectors (tensors or arrays); ``field``
    maps a tensor like ``z`` to a tensor of the same shape. Returns a scalar
    tensor, differentiable through both the score (model side) and the field
    (critic side).
    """
    z = _as_tensor(z)
    score = _as_tensor(score)
    if score.shape != z.shape:
        raise ShapeError(f"score shape {score.shape} != sample shape {z.shape}")
    fz = field(z)
    if fz.shape != z.shape:
        raise ShapeError(f"critic field shape {fz.shape} != sample shape {z.shape}")
    dot = ad.reduce_sum(ad.multiply(score, fz))
    trace = ad.jacobian_trace(field, z, mode=trace_mode, n_probes=n_probes, rng=rng)
    return ad.add(dot, trace)


def discrepancy(batch, scores, field, trace_mode="exact", n_probes=64, rng=None):
    """Mean Stein term over a batch: rows of ``batch`` are samples.

    ``batch``/``scores``: (B, d) tensors or arrays; ``field`` maps the whole
    (B, d) tensor row-wise (no cross-sample coupling). Returns a scalar.
    """
    z = _as_tensor(batch)
    scores = _as_tensor(scores)
    if z.ndim != 2 or z.shape[0] == 0:
        raise ShapeError(f"discrepancy needs a nonempty (B, d) batch, got {z.shape}")
    if scores.shape != z.shape:
        raise ShapeError(f"scores shape {scores.shape} != batch shape {z.shape}")
    fz = field(z)
    if fz.shape != z.shape:
        raise ShapeError(f"critic field shape {fz.shape} != batch shape {z.shape}")
    dots = ad.reduce_sum(ad.multiply(scores, fz), axis=-1)
    traces = ad.batch_trace(fz, z, mode=trace_mode, n_probes=n_probes, rng=rng)
    return ad.reduce_mean(ad.add(dots, traces))
