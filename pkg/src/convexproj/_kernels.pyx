# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the batched kernels; same contracts as _kernels_py."""

import numpy as np
from libc.math cimport log1p, sqrt, asinh, atan2, fabs, INFINITY


def polytope_hilbert(G1, G2):
    cdef double[:, ::1] a = np.ascontiguousarray(np.atleast_2d(G1), dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(np.atleast_2d(G2), dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double d, ra, rb, r
    for i in range(n):
        ra = 0.0
        rb = 0.0
        for j in range(m):
            d = b[i, j] - a[i, j]
            if d > 0:
                r = d / a[i, j] if a[i, j] > 0 else INFINITY
                if r > ra:
                    ra = r
            elif d < 0:
                r = -d / b[i, j] if b[i, j] > 0 else INFINITY
                if r > rb:
                    rb = r
        out[i] = 0.5 * (log1p(ra) + log1p(rb))
    return out_arr


def quadric_hilbert(q11, q12, q22):
    cdef double[::1] x = np.ascontiguousarray(np.atleast_1d(q11), dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(np.atleast_1d(q12), dtype=np.float64)
    cdef double[::1] z = np.ascontiguousarray(np.atleast_1d(q22), dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double prod, disc
    for i in range(n):
        prod = x[i] * z[i]
        if prod <= 0:
            out[i] = INFINITY
            continue
        disc = y[i] * y[i] - prod
        if disc < 0:
            disc = 0.0
        out[i] = asinh(sqrt(disc) / sqrt(prod))
    if np.ndim(q11) == 0 and np.ndim(q12) == 0 and np.ndim(q22) == 0:
        return out_arr[0]
    return out_arr


def nearest_angles(A, B):
    cdef double[:, ::1] a = np.ascontiguousarray(np.atleast_2d(A), dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(np.atleast_2d(B), dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1], i, j, k, best
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double dot, bestabs, c, s, r
    for i in range(n):
        best = 0
        bestabs = -1.0
        for j in range(m):
            dot = 0.0
            for k in range(d):
                dot += a[i, k] * b[j, k]
            if fabs(dot) > bestabs:
                bestabs = fabs(dot)
                best = j
        c = 0.0
        for k in range(d):
            c += a[i, k] * b[best, k]
        s = 0.0
        for k in range(d):
            r = a[i, k] - c * b[best, k]
            s += r * r
        out[i] = atan2(sqrt(s), fabs(c))
    return out_arr
