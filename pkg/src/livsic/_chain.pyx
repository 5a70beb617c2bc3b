# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled product-chain kernels.

Input stacks are C-contiguous float64 arrays of shape (B, L, d, d).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs

cnp.import_array()


cdef inline void _matmul(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


cdef inline double _rownorm(double[:, ::1] a, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double best = 0.0, s
    for i in range(d):
        s = 0.0
        for j in range(d):
            s = s + fabs(a[i, j])
        if s > best:
            best = s
    return best


def chain_prefix(double[:, :, :, ::1] mats, bint left=True):
    cdef Py_ssize_t B = mats.shape[0], L = mats.shape[1], d = mats.shape[2]
    out_arr = np.zeros((B, L + 1, d, d))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, k, i
    with nogil:
        for b in range(B):
            for i in range(d):
                out[b, 0, i, i] = 1.0
            for k in range(L):
                if left:
                    _matmul(mats[b, k], out[b, k], out[b, k + 1], d)
                else:
                    _matmul(out[b, k], mats[b, k], out[b, k + 1], d)
    return out_arr


def chain_log_norms(double[:, :, :, ::1] mats, bint left=True):
    cdef Py_ssize_t B = mats.shape[0], L = mats.shape[1], d = mats.shape[2]
    res_arr = np.empty((B, L))
    cdef double[:, ::1] res = res_arr
    cur_arr = np.zeros((d, d))
    nxt_arr = np.zeros((d, d))
    cdef double[:, ::1] cur = cur_arr
    cdef double[:, ::1] nxt = nxt_arr
    cdef double[:, ::1] tmp
    cdef Py_ssize_t b, k, i, j
    cdef double shift, nrm
    with nogil:
        for b in range(B):
            for i in range(d):
                for j in range(d):
                    cur[i, j] = 1.0 if i == j else 0.0
            shift = 0.0
            for k in range(L):
                if left:
                    _matmul(mats[b, k], cur, nxt, d)
                else:
                    _matmul(cur, mats[b, k], nxt, d)
                tmp = cur
                cur = nxt
                nxt = tmp
                nrm = _rownorm(cur, d)
                res[b, k] = shift + log(nrm)
                if nrm > 1e100 or (nrm < 1e-100 and nrm > 0.0):
                    for i in range(d):
                        for j in range(d):
                            cur[i, j] = cur[i, j] / nrm
                    shift = shift + log(nrm)
    return res_arr
