# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels; same contracts as ``_kernels_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, isfinite, sqrt

cnp.import_array()


def all_finite(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        if not isfinite(a[i]):
            return False
    return True


def elu(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = x[i] if x[i] > 0.0 else expm1(x[i])
    return out_arr


def elu_prime(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = 1.0 if x[i] > 0.0 else exp(x[i])
    return out_arr


def relu(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = x[i] if x[i] > 0.0 else 0.0
    return out_arr


def take_upper(double[:, :, ::1] a, long[::1] iu, long[::1] ju):
    cdef Py_ssize_t b, k, m = a.shape[0], d = iu.shape[0]
    out_arr = np.empty((m, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for b in range(m):
        for k in range(d):
            out[b, k] = a[b, iu[k], ju[k]]
    return out_arr


def put_upper(double[:, ::1] u, long[::1] iu, long[::1] ju, Py_ssize_t n, bint sym):
    cdef Py_ssize_t b, k, m = u.shape[0], d = u.shape[1]
    out_arr = np.zeros((m, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    for b in range(m):
        for k in range(d):
            out[b, iu[k], ju[k]] = u[b, k]
            if sym:
                out[b, ju[k], iu[k]] = u[b, k]
    return out_arr


def symmetrize(double[:, :, ::1] a):
    cdef Py_ssize_t b, i, j, m = a.shape[0], n = a.shape[1]
    out_arr = np.empty((m, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double v
    for b in range(m):
        for i in range(n):
            out[b, i, i] = a[b, i, i]
            for j in range(i + 1, n):
                v = (a[b, i, j] + a[b, j, i]) * 0.5
                out[b, i, j] = v
                out[b, j, i] = v
    return out_arr


def level_scale_shift(double[:, ::1] y, double[::1] alpha, double[::1] beta):
    cdef Py_ssize_t l, j, k = y.shape[0], r = y.shape[1]
    out_arr = np.empty((k, r), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double a, b
    for l in range(k):
        a = alpha[l]
        b = beta[l]
        for j in range(r):
            out[l, j] = y[l, j] * a + b
    return out_arr


def adam_update(double[::1] param, double[::1] grad, double[::1] m, double[::1] v,
                long step, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t i, n = param.shape[0]
    cdef double c1 = 1.0 - beta1 ** step
    cdef double c2 = 1.0 - beta2 ** step
    cdef double g
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] += lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)
