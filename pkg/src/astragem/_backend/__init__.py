"""Kernel backend selection.

The hot inner-loop kernels exist twice: a Cython extension
(``astragem._backend._kernels``) and a pure NumPy fallback
(``astragem._backend._kernels_py``). The compiled module is preferred when it
imports cleanly; set ``ASTRAGEM_BACKEND=python`` to force the fallback (the
benchmark in ``benchmarks/bench_backend.py`` compares the two).

Callers use the normalized wrappers below, which accept arbitrary leading
axes and hand the kernels contiguous collapsed views.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("ASTRAGEM_BACKEND", "") == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def all_finite(a):
    if a.size == 0:
        return True
    if a.flags.c_contiguous and a.dtype == np.float64:
        return _impl.all_finite(a.reshape(-1))
    # Non-contiguous views: a sum is one pass with no copy; NaN/Inf poison it.
    return bool(np.isfinite(a.sum()))


def elu(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.elu(x.ravel()).reshape(x.shape)


def elu_prime(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.elu_prime(x.ravel()).reshape(x.shape)


def relu(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.relu(x.ravel()).reshape(x.shape)


def take_upper(a, iu, ju):
    """Strict upper triangle of the trailing (n, n) axes, row-major order."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    n = a.shape[-1]
    lead = a.shape[:-2]
    flat = a.reshape((-1, n, n))
    out = _impl.take_upper(flat, iu, ju)
    return out.reshape(lead + (iu.shape[0],))


def put_upper(u, iu, ju, n, sym):
    """Scatter upper-triangle coordinates back into (n, n) matrices.

    With ``sym`` the result is mirrored below the diagonal; either way the
    diagonal is exactly zero.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    lead = u.shape[:-1]
    flat = u.reshape((-1, u.shape[-1]))
    out = _impl.put_upper(flat, iu, ju, n, sym)
    return out.reshape(lead + (n, n))


def symmetrize(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    n = a.shape[-1]
    flat = a.reshape((-1, a.shape[-2], n))
    return _impl.symmetrize(flat).reshape(a.shape)


def level_scale_shift(y, alpha, beta):
    """y * alpha + beta with per-leading-axis scalars: y (k, ...), alpha/beta (k,)."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    flat = y.reshape((y.shape[0], -1))
    return _impl.level_scale_shift(flat, alpha, beta).reshape(y.shape)


def adam_update(param, grad, m, v, step, lr, beta1, beta2, eps):
    _impl.adam_update(
        param.ravel(),
        np.ascontiguousarray(grad, dtype=np.float64).ravel(),
        m.ravel(),
        v.ravel(),
        step,
        lr,
        beta1,
        beta2,
        eps,
    )
