# cython: language_level=3
"""Compiled gating kernels.

Semantics mirror ipiagent._kernels._pure exactly; that module is the
reference. Keep both in sync when touching the gate rule.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

REASON_UNCHANGED = 0
REASON_PASS_THROUGH = 1
REASON_SUPPRESSED = 2
REASON_FORCED = 3

cdef int _UNCHANGED = 0
cdef int _PASS_THROUGH = 1
cdef int _SUPPRESSED = 2
cdef int _FORCED = 3


@cython.boundscheck(False)
@cython.wraparound(False)
def max_pool_delta(scores):
    """See _pure.max_pool_delta."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s = np.ascontiguousarray(
        scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] < 1:
        raise ValueError("scores must be a (T, M) matrix with M >= 1")
    cdef Py_ssize_t n_ticks = s.shape[0]
    cdef Py_ssize_t n_props = s.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] delta = np.zeros(
        n_ticks, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] defined = np.zeros(
        n_ticks, dtype=np.uint8)
    cdef Py_ssize_t t, m
    cdef double best, d
    for t in range(1, n_ticks):
        best = s[t, 0] - s[t - 1, 0]
        for m in range(1, n_props):
            d = s[t, m] - s[t - 1, m]
            if d > best:
                best = d
        delta[t] = best
        defined[t] = 1
    return delta, defined


@cython.boundscheck(False)
@cython.wraparound(False)
def gate_series(raw, delta, defined, double theta_low, double theta_high):
    """See _pure.gate_series."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] r = np.ascontiguousarray(
        raw, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(
        delta, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.ascontiguousarray(
        defined, dtype=np.uint8)
    cdef Py_ssize_t n_ticks = r.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] final = np.empty(
        n_ticks, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] reason = np.empty(
        n_ticks, dtype=np.uint8)
    cdef Py_ssize_t t
    for t in range(n_ticks):
        _gate_one(r[t], d[t], ok[t], theta_low, theta_high,
                  &final[t], &reason[t])
    return final, reason


cdef inline void _gate_one(cnp.uint8_t raw, double delta, cnp.uint8_t defined,
                           double theta_low, double theta_high,
                           cnp.uint8_t *final, cnp.uint8_t *reason) nogil:
    if not defined:
        final[0] = raw
        reason[0] = _PASS_THROUGH
    elif raw and delta < theta_low:
        final[0] = 0
        reason[0] = _SUPPRESSED
    elif (not raw) and delta > theta_high:
        final[0] = 1
        reason[0] = _FORCED
    else:
        final[0] = raw
        reason[0] = _UNCHANGED


@cython.boundscheck(False)
@cython.wraparound(False)
def sweep_grid(raw, delta, defined, theta_lows, theta_highs):
    """See _pure.sweep_grid."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] r = np.ascontiguousarray(
        raw, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(
        delta, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.ascontiguousarray(
        defined, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lows = np.ascontiguousarray(
        theta_lows, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] highs = np.ascontiguousarray(
        theta_highs, dtype=np.float64)
    cdef Py_ssize_t n_ticks = r.shape[0]
    cdef Py_ssize_t n_grid = lows.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] first = np.full(
        n_grid, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] n_sup = np.zeros(
        n_grid, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] n_for = np.zeros(
        n_grid, dtype=np.int64)
    cdef Py_ssize_t g, t
    cdef cnp.uint8_t fin, rsn
    with nogil:
        for g in range(n_grid):
            for t in range(n_ticks):
                _gate_one(r[t], d[t], ok[t], lows[g], highs[g], &fin, &rsn)
                if fin and first[g] < 0:
                    first[g] = t
                if rsn == _SUPPRESSED:
                    n_sup[g] += 1
                elif rsn == _FORCED:
                    n_for[g] += 1
    return first, n_sup, n_for
