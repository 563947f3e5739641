"""Pure NumPy implementations of the hot kernels.

Shapes are normalized by the callers in ``astragem._backend``: matrix kernels
receive contiguous float64 arrays already collapsed to three axes
(batch, n, n) or two axes (batch, d).
"""

import numpy as np


def all_finite(a):
    # One pass, no bool temporary: any NaN/Inf poisons the sum. The values
    # this package produces are nowhere near overflowing a float64 sum.
    return bool(np.isfinite(a.sum()))


def elu(x):
    out = np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))
    return out


def elu_prime(x):
    return np.where(x > 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


def relu(x):
    return np.maximum(x, 0.0)


def take_upper(a, iu, ju):
    # a: (batch, n, n) -> (batch, d)
    return np.ascontiguousarray(a[:, iu, ju])


def put_upper(u, iu, ju, n, sym):
    # u: (batch, d) -> (batch, n, n); upper triangle only, or mirrored.
    out = np.zeros((u.shape[0], n, n), dtype=np.float64)
    out[:, iu, ju] = u
    if sym:
        out[:, ju, iu] = u
    return out


def symmetrize(a):
    # (batch, n, n) -> (a + a^T) / 2 along the last two axes
    return (a + np.swapaxes(a, -1, -2)) * 0.5


def level_scale_shift(y, alpha, beta):
    # y: (k, rest); alpha, beta: (k,)
    return y * alpha[:, None] + beta[:, None]


def adam_update(param, grad, m, v, step, lr, beta1, beta2, eps):
    # In-place Adam with bias correction; `step` is 1-based.
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    param += lr * mhat / (np.sqrt(vhat) + eps)
