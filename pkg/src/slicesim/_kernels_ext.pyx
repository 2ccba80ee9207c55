# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled allocation kernels; see ``_kernels_py`` for the reference twin."""

import numpy as np
cimport numpy as cnp

NAME = "cython"


cdef double _fill(double budget, double* dem, double* out, Py_ssize_t n, char* done) noexcept nogil:
    # returns leftover budget
    cdef Py_ssize_t i, left = n
    cdef double rem = budget, fair
    cdef bint hit
    for i in range(n):
        done[i] = 0
    while left:
        fair = rem / left
        hit = False
        for i in range(n):
            if not done[i] and dem[i] <= fair:
                out[i] = dem[i]
                done[i] = 1
                rem -= dem[i]
                left -= 1
                hit = True
        if not hit:
            for i in range(n):
                if not done[i]:
                    out[i] = fair
            return rem - rem
    return rem


def waterfill(double budget, demands):
    cdef double[::1] dem = np.ascontiguousarray(demands, dtype=np.float64)
    cdef Py_ssize_t n = dem.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef char[::1] done = np.zeros(n, dtype=np.int8)
    cdef double left = 0.0
    if n:
        left = _fill(budget, &dem[0], &o[0], n, &done[0])
    else:
        left = budget
    return list(out), left


def cascade(double capacity, demand, rank, eps, double[::1] out):
    cdef double[::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    cdef cnp.int64_t[::1] rk = np.ascontiguousarray(rank, dtype=np.int64)
    cdef double[::1] ep = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = dem.shape[0], m = ep.shape[0]
    cdef Py_ssize_t i, r, q, k
    cdef double remaining = capacity, budget, left
    cdef bint lower
    if n == 0:
        return remaining
    totals_a = np.zeros(m, dtype=np.float64)
    cdef double[::1] totals = totals_a
    cdef cnp.intp_t[::1] idx = np.empty(n, dtype=np.intp)
    cdef double[::1] sub = np.empty(n, dtype=np.float64)
    cdef double[::1] sub_out = np.empty(n, dtype=np.float64)
    cdef char[::1] done = np.empty(n, dtype=np.int8)
    with nogil:
        for i in range(n):
            totals[rk[i]] += dem[i]
        for r in range(m):
            k = 0
            for i in range(n):
                if rk[i] == r:
                    idx[k] = i
                    sub[k] = dem[i]
                    k += 1
            if k == 0:
                continue
            lower = False
            for q in range(r + 1, m):
                if totals[q] > 0.0:
                    lower = True
                    break
            budget = remaining * (1.0 - ep[r]) if lower else remaining
            if budget < 0.0:
                budget = 0.0
            left = _fill(budget, &sub[0], &sub_out[0], k, &done[0])
            for i in range(k):
                out[idx[i]] = sub_out[i]
            remaining = remaining - budget + left
            if remaining < 0.0:
                remaining = 0.0
    return remaining
