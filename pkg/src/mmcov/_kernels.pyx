# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SINR kernel: one pass per trial over a flat batch of points."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def sinr_batch_full(gain, signal_power, interf_power, offsets, double noise):
    """Return ``(sinr, serving_index)`` for each trial.

    Same contract as the numpy fallback: serving point is the first with
    maximal ``gain``; empty trials give SINR 0 and index -1.
    """
    cdef const double[::1] g = np.ascontiguousarray(gain, dtype=np.float64)
    cdef const double[::1] s = np.ascontiguousarray(signal_power, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(interf_power, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t n = off.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    srv = np.full(n, -1, dtype=np.int64)
    cdef double[::1] o = out
    cdef long long[::1] v = srv
    cdef Py_ssize_t i, j, best, lo, hi
    cdef double bg, total, denom
    with nogil:
        for i in range(n):
            lo = off[i]
            hi = off[i + 1]
            if hi <= lo:
                continue
            best = lo
            bg = g[lo]
            total = 0.0
            for j in range(lo, hi):
                if g[j] > bg:
                    bg = g[j]
                    best = j
            for j in range(lo, hi):
                if j != best:
                    total = total + q[j]
            denom = noise + total
            if denom > 0:
                o[i] = s[best] / denom
            else:
                o[i] = INFINITY
            v[i] = best
    return out, srv
