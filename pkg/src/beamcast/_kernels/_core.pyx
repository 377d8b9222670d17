# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: KKT power solve and assignment-search inner loops.

Mirrors ``_pure.py`` operation for operation; any algorithmic change must
land in both files.
"""

import math

import numpy as np

from libc.math cimport INFINITY, fabs, log2

IMPLEMENTATION = "compiled"

MU_FLOOR = 1e-12

cdef double _MU_FLOOR = 1e-12


cdef int _solve_inner(const double* a, const double* diag, const unsigned char* mask,
                      const double* p_start, int k, double n0, double mu,
                      double inner_tol, int max_inner,
                      double* p, double* p_new, double* prev2, bint* converged) nogil:
    cdef int it, i, j
    cdef double interf, target, delta, diff, cycle
    cdef double damping = 1.0
    cdef double window_delta = INFINITY
    cdef bint have_prev2 = False
    for i in range(k):
        p[i] = p_start[i]
    for it in range(1, max_inner + 1):
        for i in range(k):
            if mask[i]:
                interf = 0.0
                for j in range(k):
                    if j != i:
                        interf += a[i * k + j] * p[j]
                target = 1.0 / mu - (interf + n0) / diag[i]
                if target < 0.0:
                    target = 0.0
            else:
                target = 0.0
            p_new[i] = target
        if damping < 1.0:
            for i in range(k):
                p_new[i] = damping * p_new[i] + (1.0 - damping) * p[i]
        delta = 0.0
        for i in range(k):
            diff = fabs(p_new[i] - p[i])
            if diff > delta:
                delta = diff
        if delta < inner_tol:
            for i in range(k):
                p[i] = p_new[i]
            converged[0] = True
            return it
        if have_prev2 and damping > 1.0 / 64.0:
            cycle = 0.0
            for i in range(k):
                diff = fabs(p_new[i] - prev2[i])
                if diff > cycle:
                    cycle = diff
            if cycle < 0.5 * delta:
                damping *= 0.5
        if it % 64 == 0:
            # stagnating (chaotic or slowly cycling) orbit: damp harder
            if delta > 0.5 * window_delta and damping > 1.0 / 64.0:
                damping *= 0.5
            window_delta = delta
        for i in range(k):
            prev2[i] = p[i]
            p[i] = p_new[i]
        have_prev2 = True
    converged[0] = False
    return max_inner


cdef double _vec_sum(const double* p, int k) nogil:
    cdef double total = 0.0
    cdef int i
    for i in range(k):
        total += p[i]
    return total


cdef long _kkt(const double* a, int k, double p_max, double n0,
               double inner_tol, int max_inner, double outer_rel_tol,
               double* p_out, double* mu_out, bint* converged,
               double* diag, unsigned char* mask, double* start,
               double* pmid, double* pnew, double* prev2) nogil:
    cdef int i, doublings, step
    cdef long total = 0
    cdef double lo, hi, mid
    cdef bint any_gain = False
    cdef bint ok = False
    cdef bint ok_mid = False
    for i in range(k):
        diag[i] = a[i * k + i]
        mask[i] = 1 if diag[i] > 0.0 else 0
        if mask[i]:
            any_gain = True
            start[i] = p_max / k
        else:
            start[i] = 0.0
    if not any_gain:
        for i in range(k):
            p_out[i] = 0.0
        mu_out[0] = INFINITY
        converged[0] = True
        return 0
    total += _solve_inner(a, diag, mask, start, k, n0, _MU_FLOOR,
                          inner_tol, max_inner, p_out, pnew, prev2, &ok)
    if _vec_sum(p_out, k) <= p_max:
        mu_out[0] = _MU_FLOOR
        converged[0] = ok
        return total
    lo = _MU_FLOOR
    hi = 1.0
    total += _solve_inner(a, diag, mask, start, k, n0, hi,
                          inner_tol, max_inner, p_out, pnew, prev2, &ok)
    doublings = 0
    while _vec_sum(p_out, k) > p_max and doublings < 200:
        hi *= 2.0
        total += _solve_inner(a, diag, mask, start, k, n0, hi,
                              inner_tol, max_inner, p_out, pnew, prev2, &ok)
        doublings += 1
    for step in range(200):
        if p_max - _vec_sum(p_out, k) <= outer_rel_tol * p_max:
            break
        if hi - lo <= 1e-16 * hi:
            break
        mid = 0.5 * (lo + hi)
        total += _solve_inner(a, diag, mask, start, k, n0, mid,
                              inner_tol, max_inner, pmid, pnew, prev2, &ok_mid)
        if _vec_sum(pmid, k) > p_max:
            lo = mid
        else:
            hi = mid
            for i in range(k):
                p_out[i] = pmid[i]
            ok = ok_mid
    mu_out[0] = hi
    converged[0] = ok
    return total


cdef double _sum_rate(const double* a, const double* p, int k, double n0) nogil:
    cdef double rate = 0.0
    cdef double interf
    cdef int i, j
    for i in range(k):
        if p[i] > 0.0 and a[i * k + i] > 0.0:
            interf = 0.0
            for j in range(k):
                if j != i:
                    interf += a[i * k + j] * p[j]
            rate += log2(1.0 + p[i] * a[i * k + i] / (interf + n0))
    return rate


def kkt_power(a, double p_max, double n0, double inner_tol=1e-10,
              int max_inner=1000, double outer_rel_tol=1e-8):
    """See ``_pure.kkt_power``."""
    cdef double[:, ::1] a_mv = np.ascontiguousarray(a, dtype=np.float64)
    cdef int k = a_mv.shape[0]
    p = np.empty(k, dtype=np.float64)
    cdef double[::1] p_mv = p
    work = np.empty(5 * k, dtype=np.float64)
    cdef double[::1] w = work
    maskbuf = np.empty(k, dtype=np.uint8)
    cdef unsigned char[::1] mask_mv = maskbuf
    cdef double mu = 0.0
    cdef bint converged = False
    cdef long total
    with nogil:
        total = _kkt(&a_mv[0, 0], k, p_max, n0, inner_tol, max_inner, outer_rel_tol,
                     &p_mv[0], &mu, &converged,
                     &w[0], &mask_mv[0], &w[k], &w[2 * k], &w[3 * k], &w[4 * k])
    return p, (math.inf if mu == INFINITY else mu), int(total), bool(converged)


def candidate_gain_matrix(gains, beams, bint printed=False):
    """See ``_pure.candidate_gain_matrix``."""
    gains = np.asarray(gains, dtype=np.float64)
    beams = np.asarray(beams, dtype=np.intp)
    if printed:
        own = gains[np.arange(len(beams)), beams]
        return np.repeat(own[None, :], len(beams), axis=0)
    return gains[:, beams]


def sum_rate_for(a, p, double n0):
    """See ``_pure.sum_rate_for``."""
    cdef double[:, ::1] a_mv = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] p_mv = np.ascontiguousarray(p, dtype=np.float64)
    cdef int k = a_mv.shape[0]
    cdef double rate
    with nogil:
        rate = _sum_rate(&a_mv[0, 0], &p_mv[0], k, n0)
    return rate


def argmax_assignment(gains, lists, lens, double p_max, double n0,
                      bint printed=False, double inner_tol=1e-10,
                      int max_inner=1000, double outer_rel_tol=1e-8):
    """See ``_pure.argmax_assignment``."""
    cdef double[:, ::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef int k = g.shape[0]
    cdef int n = g.shape[1]
    cdef double[:, ::1] upper = np.log2(1.0 + p_max * np.asarray(g) / n0)
    lists_arr = np.zeros((k, max(int(np.max(lens)), 1)), dtype=np.int32)
    for i_py, row in enumerate(lists):
        lists_arr[i_py, : len(row)] = row
    cdef int[:, ::1] ls = lists_arr
    cdef int[::1] ln = np.ascontiguousarray(lens, dtype=np.int32)

    pos_arr = np.zeros(k, dtype=np.int32)
    beams_arr = np.zeros(k, dtype=np.int32)
    best_beams_arr = np.zeros(k, dtype=np.int32)
    cdef int[::1] pos = pos_arr
    cdef int[::1] beams = beams_arr
    cdef int[::1] best_beams = best_beams_arr
    a_arr = np.empty((k, k), dtype=np.float64)
    cdef double[:, ::1] a_mv = a_arr
    p_arr = np.empty(k, dtype=np.float64)
    best_p_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] p_mv = p_arr
    cdef double[::1] best_p = best_p_arr
    work = np.empty(5 * k, dtype=np.float64)
    cdef double[::1] w = work
    maskbuf = np.empty(k, dtype=np.uint8)
    cdef unsigned char[::1] mask_mv = maskbuf

    cdef double best_rate = -INFINITY
    cdef double best_mu = 0.0
    cdef double mu = 0.0
    cdef double rate, bound
    cdef bint converged = False
    cdef bint found = False
    cdef bint distinct, done
    cdef long evaluated = 0, failures = 0, total_inner = 0, pruned = 0
    cdef int i, j, axis

    for i in range(k):
        if ln[i] <= 0:
            return None, None, math.nan, -math.inf, 0, 0, 0, 0

    with nogil:
        done = False
        while not done:
            for i in range(k):
                beams[i] = ls[i, pos[i]]
            distinct = True
            for i in range(k):
                for j in range(i + 1, k):
                    if beams[i] == beams[j]:
                        distinct = False
                        break
                if not distinct:
                    break
            if distinct:
                bound = 0.0
                for i in range(k):
                    bound += upper[i, beams[i]]
                if bound <= best_rate:
                    pruned += 1
                else:
                    evaluated += 1
                    for i in range(k):
                        for j in range(k):
                            if printed:
                                a_mv[i, j] = g[j, beams[j]]
                            else:
                                a_mv[i, j] = g[i, beams[j]]
                    total_inner += _kkt(&a_mv[0, 0], k, p_max, n0, inner_tol, max_inner,
                                        outer_rel_tol, &p_mv[0], &mu, &converged,
                                        &w[0], &mask_mv[0], &w[k], &w[2 * k], &w[3 * k], &w[4 * k])
                    if not converged:
                        failures += 1
                    else:
                        rate = _sum_rate(&a_mv[0, 0], &p_mv[0], k, n0)
                        if rate > best_rate:
                            best_rate = rate
                            best_mu = mu
                            found = True
                            for i in range(k):
                                best_beams[i] = beams[i]
                                best_p[i] = p_mv[i]
            # odometer increment, rightmost axis fastest
            axis = k - 1
            while axis >= 0:
                pos[axis] += 1
                if pos[axis] < ln[axis]:
                    break
                pos[axis] = 0
                axis -= 1
            if axis < 0:
                done = True

    if not found:
        return None, None, math.nan, -math.inf, int(evaluated), int(failures), int(total_inner), int(pruned)
    return (
        best_beams_arr.astype(np.int64),
        best_p_arr.copy(),
        float(best_mu),
        float(best_rate),
        int(evaluated),
        int(failures),
        int(total_inner),
        int(pruned),
    )
