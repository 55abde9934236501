# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and the same floating-point operation order, so that the
elementwise kernels agree bit-for-bit across backends.
"""
import numpy as np

from libc.math cimport sqrt
from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_POW_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix_uniform(uint64_t key, uint64_t counter, Py_ssize_t n):
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef uint64_t z
    with nogil:
        for i in range(n):
            z = _mix(key + (counter + <uint64_t>i + 1) * GOLDEN)
            o[i] = <double>(z >> 11) * TWO_POW_M53
    return out


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps,
                double bc1, double bc2):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double omb1 = 1.0 - beta1
    cdef double omb2 = 1.0 - beta2
    cdef double gi, mi, vi
    with nogil:
        for i in range(n):
            gi = g[i]
            mi = beta1 * m[i] + omb1 * gi
            vi = beta2 * v[i] + omb2 * gi * gi
            m[i] = mi
            v[i] = vi
            p[i] = p[i] - lr * (mi / bc1) / (sqrt(vi / bc2) + eps)


def add_decay_grad(double[::1] grad, const double[::1] w, double alpha, int l1):
    cdef Py_ssize_t i, n = grad.shape[0]
    cdef double wi
    with nogil:
        if l1:
            for i in range(n):
                wi = w[i]
                # branchless sign; sign(0) = 0
                grad[i] = grad[i] + alpha * <double>((wi > 0) - (wi < 0))
        else:
            for i in range(n):
                grad[i] = grad[i] + alpha * w[i]


def relu_forward(const double[:, ::1] x):
    out = np.empty((x.shape[0], x.shape[1]), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double xi
    with nogil:
        for i in range(x.shape[0]):
            for j in range(x.shape[1]):
                xi = x[i, j]
                o[i, j] = xi if xi > 0 else 0.0
    return out


def relu_backward(const double[:, ::1] grad, const double[:, ::1] x):
    out = np.empty((x.shape[0], x.shape[1]), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(x.shape[0]):
            for j in range(x.shape[1]):
                o[i, j] = grad[i, j] if x[i, j] > 0 else 0.0
    return out


def batchnorm_train_forward(const double[:, ::1] x, double eps):
    cdef Py_ssize_t n = x.shape[0], f = x.shape[1], i, j
    mean_a = np.zeros(f, dtype=np.float64)
    var_a = np.zeros(f, dtype=np.float64)
    inv_a = np.empty(f, dtype=np.float64)
    xhat_a = np.empty((n, f), dtype=np.float64)
    cdef double[::1] mean = mean_a, var = var_a, inv = inv_a
    cdef double[:, ::1] xhat = xhat_a
    cdef double d
    with nogil:
        for i in range(n):
            for j in range(f):
                mean[j] = mean[j] + x[i, j]
        for j in range(f):
            mean[j] = mean[j] / n
        for i in range(n):
            for j in range(f):
                d = x[i, j] - mean[j]
                var[j] = var[j] + d * d
        for j in range(f):
            var[j] = var[j] / n
            inv[j] = 1.0 / sqrt(var[j] + eps)
        for i in range(n):
            for j in range(f):
                xhat[i, j] = (x[i, j] - mean[j]) * inv[j]
    return xhat_a, mean_a, var_a, inv_a


def batchnorm_backward(const double[:, ::1] grad, const double[:, ::1] xhat,
                       const double[::1] inv):
    cdef Py_ssize_t n = grad.shape[0], f = grad.shape[1], i, j
    gsum_a = np.zeros(f, dtype=np.float64)
    gxsum_a = np.zeros(f, dtype=np.float64)
    out = np.empty((n, f), dtype=np.float64)
    cdef double[::1] gsum = gsum_a, gxsum = gxsum_a
    cdef double[:, ::1] o = out
    cdef double dn = <double>n
    with nogil:
        for i in range(n):
            for j in range(f):
                gsum[j] = gsum[j] + grad[i, j]
                gxsum[j] = gxsum[j] + grad[i, j] * xhat[i, j]
        for i in range(n):
            for j in range(f):
                o[i, j] = (inv[j] / dn) * (dn * grad[i, j] - gsum[j] - xhat[i, j] * gxsum[j])
    return out
