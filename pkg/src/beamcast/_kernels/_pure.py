"""Pure-Python/numpy kernels: KKT power solve and assignment-search inner loops.

Reference implementation of the hot paths; the compiled extension in
``_core.pyx`` mirrors this module exactly. Keep the two in sync.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

IMPLEMENTATION = "pure"

MU_FLOOR = 1e-12


def _solve_inner(a, diag, mask, p_start, n0, mu, inner_tol, max_inner):
    """Fixed-point iteration of the per-UE water-filling update at a fixed mu.

    Jacobi updates from the current interference, starting at ``p_start``.
    Damping 0.5 kicks in when a period-2 oscillation is detected and halves
    again on re-detection (down to 1/64) for strongly coupled instances.
    """
    a_off = a - np.diag(diag)
    p = p_start.copy()
    prev2 = None
    damping = 1.0
    window_delta = math.inf
    for it in range(1, max_inner + 1):
        interf = a_off @ p
        with np.errstate(divide="ignore", invalid="ignore"):
            target = 1.0 / mu - (interf + n0) / diag
        p_new = np.where(mask, np.maximum(target, 0.0), 0.0)
        if damping < 1.0:
            p_new = damping * p_new + (1.0 - damping) * p
        delta = float(np.max(np.abs(p_new - p)))
        if delta < inner_tol:
            return p_new, it, True
        if prev2 is not None and damping > 1.0 / 64.0:
            if float(np.max(np.abs(p_new - prev2))) < 0.5 * delta:
                damping *= 0.5
        if it % 64 == 0:
            # stagnating (chaotic or slowly cycling) orbit: damp harder
            if delta > 0.5 * window_delta and damping > 1.0 / 64.0:
                damping *= 0.5
            window_delta = delta
        prev2 = p
        p = p_new
    return p, max_inner, False


def kkt_power(a, p_max, n0, inner_tol=1e-10, max_inner=1000, outer_rel_tol=1e-8):
    """Water-filling power split for one beam assignment.

    ``a[k, j]`` is the gain of UE k's channel against UE j's beam (the
    diagonal holds own-beam gains). Returns ``(p, mu, inner_iterations,
    converged)``; ``converged`` reports the fixed-point status at the
    returned water level.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]
    diag = np.ascontiguousarray(np.diagonal(a)).copy()
    mask = diag > 0.0
    if not mask.any():
        return np.zeros(k), math.inf, 0, True
    start = np.where(mask, p_max / k, 0.0)
    total = 0

    def solve(mu):
        nonlocal total
        p, it, ok = _solve_inner(a, diag, mask, start, n0, mu, inner_tol, max_inner)
        total += it
        return p, ok

    p_lo, ok_lo = solve(MU_FLOOR)
    if p_lo.sum() <= p_max:
        # water level capped at the bracket floor; budget not binding
        return p_lo, MU_FLOOR, total, ok_lo
    lo = MU_FLOOR
    hi = 1.0
    p_hi, ok_hi = solve(hi)
    doublings = 0
    while p_hi.sum() > p_max and doublings < 200:
        hi *= 2.0
        p_hi, ok_hi = solve(hi)
        doublings += 1
    for _ in range(200):
        if p_max - p_hi.sum() <= outer_rel_tol * p_max:
            break
        if hi - lo <= 1e-16 * hi:
            break
        mid = 0.5 * (lo + hi)
        p_mid, ok_mid = solve(mid)
        if p_mid.sum() > p_max:
            lo = mid
        else:
            hi = mid
            p_hi, ok_hi = p_mid, ok_mid
    return p_hi, hi, total, ok_hi


def candidate_gain_matrix(gains, beams, printed=False):
    """K x K gain matrix of one assignment; entry (k, j) pairs UE k with UE j's beam.

    The printed-form variant replaces every off-diagonal entry with UE j's
    own-beam gain, reproducing the alternate interference convention.
    """
    gains = np.asarray(gains, dtype=float)
    beams = np.asarray(beams, dtype=int)
    if printed:
        own = gains[np.arange(len(beams)), beams]
        return np.repeat(own[None, :], len(beams), axis=0)
    return gains[:, beams]


def sum_rate_for(a, p, n0):
    """Sum of log2(1 + SINR_k) for the gain matrix ``a`` and power split ``p``."""
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    diag = np.diagonal(a)
    interf = a @ p - diag * p
    rate = 0.0
    for k in range(len(p)):
        if p[k] > 0.0 and diag[k] > 0.0:
            rate += math.log2(1.0 + p[k] * diag[k] / (interf[k] + n0))
    return rate


def argmax_assignment(
    gains,
    lists,
    lens,
    p_max,
    n0,
    printed=False,
    inner_tol=1e-10,
    max_inner=1000,
    outer_rel_tol=1e-8,
):
    """Search the cartesian product of per-UE candidate beam lists for the
    assignment whose KKT power split maximizes the sum rate.

    Tuples with duplicate beams are skipped (beam-conflict constraint), and
    candidates whose interference-free upper bound ``sum_k log2(1 + P_max *
    g_kk / N0)`` cannot beat the incumbent are pruned without solving (the
    bound is exact, so the returned maximum is unaffected). Candidates whose
    inner solve fails to converge count as failures and never win. Ties
    resolve to the earliest candidate in odometer order (rightmost list
    varies fastest), so results are reproducible.

    Returns ``(best_beams, best_p, best_mu, best_rate, evaluated,
    kkt_failures, total_inner, pruned)``; ``best_beams`` is None when no
    feasible candidate converged.
    """
    gains = np.asarray(gains, dtype=float)
    k = gains.shape[0]
    upper = np.log2(1.0 + p_max * gains / n0)  # per-(ue, beam) rate bound
    best_beams = None
    best_p = None
    best_mu = math.nan
    best_rate = -math.inf
    evaluated = 0
    failures = 0
    pruned = 0
    total_inner = 0
    beams = np.empty(k, dtype=int)
    for positions in itertools.product(*(range(n) for n in lens)):
        for i in range(k):
            beams[i] = lists[i][positions[i]]
        if len(set(beams.tolist())) != k:
            continue
        bound = float(sum(upper[i, beams[i]] for i in range(k)))
        if bound <= best_rate:
            pruned += 1
            continue
        evaluated += 1
        a = candidate_gain_matrix(gains, beams, printed)
        p, mu, inner, ok = kkt_power(a, p_max, n0, inner_tol, max_inner, outer_rel_tol)
        total_inner += inner
        if not ok:
            failures += 1
            continue
        rate = sum_rate_for(a, p, n0)
        if rate > best_rate:
            best_rate = rate
            best_beams = beams.copy()
            best_p = p
            best_mu = mu
    return best_beams, best_p, best_mu, best_rate, evaluated, failures, total_inner, pruned
