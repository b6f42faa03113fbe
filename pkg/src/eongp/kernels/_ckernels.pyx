# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`eongp.kernels._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, M_PI

cnp.import_array()


def biquad(const double[::1] x, double b0, double b1, double b2,
           double a1, double a2, double z1=0.0, double z2=0.0):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double xi, yi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    with nogil:
        for i in range(n):
            xi = x[i]
            yi = b0 * xi + z1
            z1 = b1 * xi - a1 * yi + z2
            z2 = b2 * xi - a2 * yi
            y[i] = yi
    return out, z1, z2


def levenshtein(const long long[::1] ref, const long long[::1] hyp):
    cdef Py_ssize_t n = ref.shape[0]
    cdef Py_ssize_t m = hyp.shape[0]
    cdef Py_ssize_t i, j
    cdef long long sub, best
    prev_arr = np.arange(m + 1, dtype=np.int64)
    cur_arr = np.empty(m + 1, dtype=np.int64)
    cdef long long[::1] prev = prev_arr
    cdef long long[::1] cur = cur_arr
    cdef long long[::1] tmp
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1)
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if sub < best:
                best = sub
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[m])


def goertzel_power(const double[::1] x, double frequency, double sample_rate):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double coeff = 2.0 * cos(2.0 * M_PI * frequency / sample_rate)
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0
    with nogil:
        for i in range(n):
            s0 = x[i] + coeff * s1 - s2
            s2 = s1
            s1 = s0
    return s1 * s1 + s2 * s2 - coeff * s1 * s2
