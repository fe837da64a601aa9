# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``: strided periodic filter kernels."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def analysis(const double[:, ::1] x, const double[::1] f):
    cdef Py_ssize_t n_batch = x.shape[0]
    cdef Py_ssize_t length = x.shape[1]
    cdef Py_ssize_t half = length // 2
    cdef Py_ssize_t n_taps = f.shape[0]
    out_arr = np.zeros((n_batch, half))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, p, k, idx
    cdef double acc
    for b in range(n_batch):
        for p in range(half):
            acc = 0.0
            idx = 2 * p
            for k in range(n_taps):
                acc += f[k] * x[b, idx]
                idx += 1
                if idx >= length:
                    idx -= length
            out[b, p] = acc
    return out_arr


def synthesis(const double[:, ::1] c, const double[::1] f, Py_ssize_t length):
    cdef Py_ssize_t n_batch = c.shape[0]
    cdef Py_ssize_t half = c.shape[1]
    cdef Py_ssize_t n_taps = f.shape[0]
    out_arr = np.zeros((n_batch, length))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, p, k, idx
    cdef double cv
    for b in range(n_batch):
        for p in range(half):
            cv = c[b, p]
            idx = 2 * p
            for k in range(n_taps):
                out[b, idx] += f[k] * cv
                idx += 1
                if idx >= length:
                    idx -= length
    return out_arr


def tap_grad(const double[:, ::1] x, const double[:, ::1] u, Py_ssize_t n_taps):
    cdef Py_ssize_t n_batch = x.shape[0]
    cdef Py_ssize_t length = x.shape[1]
    cdef Py_ssize_t half = u.shape[1]
    out_arr = np.zeros(n_taps)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, p, k, idx
    cdef double uv
    for b in range(n_batch):
        for p in range(half):
            uv = u[b, p]
            idx = 2 * p
            for k in range(n_taps):
                out[k] += uv * x[b, idx]
                idx += 1
                if idx >= length:
                    idx -= length
    return out_arr
