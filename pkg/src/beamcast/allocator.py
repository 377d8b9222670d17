"""Joint beam-assignment and power-allocation solvers.

Two policies: exhaustive enumeration over all ordered beam assignments
(optimal, factorially expensive) and the conflict-free top-m policy that
lets every UE with a uniquely-strongest beam keep it and only enumerates
the remaining conflicted UEs over their m best-ranked candidates.

Power for every candidate assignment comes from the same water-filling
stationary point: a damped fixed-point iteration of the per-UE update
nested inside a bisection on the Lagrange multiplier (the water level).
The objective with interference is non-convex, so the solver returns the
stationary point of that update, not a certified global optimum; the test
suite checks it against a grid-search oracle.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from . import _kernels
from .estimator import EffectiveChannelEstimate
from .sweep import BeamImage


class KktConvergenceError(RuntimeError):
    """Inner fixed-point iteration did not converge; carries the iterate trace."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


@dataclasses.dataclass(frozen=True)
class AllocationResult:
    """Solver output for one frame."""

    assignment: np.ndarray  # (K, n_beams) binary matrix
    beams: np.ndarray  # (K,) beam index per UE
    power: np.ndarray  # (K,) watts
    sum_rate: float  # bits/s/Hz under the gains given to the solver
    combinations_evaluated: int  # nominal candidate count (Eq.-style formula)
    mu: float  # water-level multiplier of the winning candidate
    inner_iterations: int  # fixed-point iterations summed over the search
    diagnostics: dict = dataclasses.field(default_factory=dict)


def assignment_matrix(beams: np.ndarray, n_beams: int) -> np.ndarray:
    """Binary UE-by-beam matrix for a per-UE beam index vector."""
    beams = np.asarray(beams, dtype=int)
    mat = np.zeros((len(beams), n_beams), dtype=np.int8)
    mat[np.arange(len(beams)), beams] = 1
    return mat


def validate_assignment(mat: np.ndarray) -> None:
    """Row sums must be exactly 1, column sums at most 1."""
    mat = np.asarray(mat)
    if np.any(mat.sum(axis=1) != 1):
        raise ValueError("every UE must be assigned exactly one beam")
    if np.any(mat.sum(axis=0) > 1):
        raise ValueError("a beam may serve at most one UE")


def validate_power(p: np.ndarray, p_max: float) -> None:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    if p.sum() > p_max * (1 + 1e-9):
        raise ValueError("total power exceeds the budget")


def _gains_of(eff) -> np.ndarray:
    if isinstance(eff, EffectiveChannelEstimate):
        return eff.gains
    arr = np.asarray(eff)
    if np.iscomplexobj(arr):
        return np.abs(arr) ** 2
    return arr.astype(float)


def sinr(
    k: int,
    beams,
    power,
    eff,
    n0: float,
    interference_model: str = "own_channel",
) -> float:
    """SINR of UE k: p_k g_kk / (sum_{i != k} p_i g_ki + N0).

    ``own_channel`` measures interference on UE k's own channel against the
    other UEs' beams; ``printed`` uses each interferer's own effective gain
    instead (the alternate convention; see README).
    """
    gains = _gains_of(eff)
    beams = np.asarray(beams, dtype=int)
    power = np.asarray(power, dtype=float)
    a = _kernels.candidate_gain_matrix(gains, beams, printed=(interference_model == "printed"))
    own = a[k, k]
    if own <= 0 or power[k] <= 0:
        return 0.0
    interf = float(a[k] @ power - own * power[k])
    return float(power[k] * own / (interf + n0))


def sum_rate(beams, power, eff, n0: float, interference_model: str = "own_channel") -> float:
    """Sum over UEs of log2(1 + SINR)."""
    gains = _gains_of(eff)
    beams = np.asarray(beams, dtype=int)
    a = _kernels.candidate_gain_matrix(gains, beams, printed=(interference_model == "printed"))
    return float(_kernels.sum_rate_for(a, np.asarray(power, dtype=float), n0))


def power_allocate_kkt(
    beams,
    eff,
    p_max: float,
    n0: float,
    interference_model: str = "own_channel",
    inner_tol: float = 1e-10,
    max_inner: int = 1000,
    outer_rel_tol: float = 1e-8,
) -> tuple[np.ndarray, float, int]:
    """Water-filling power split for a fixed beam assignment.

    Returns ``(p, mu, inner_iterations)``. UEs with zero own-beam gain get
    zero power; at least one UE must have positive gain. Raises
    :class:`KktConvergenceError` when the inner fixed point stalls.
    """
    if p_max <= 0:
        raise ValueError("power budget must be positive")
    gains = _gains_of(eff)
    beams = np.asarray(beams, dtype=int)
    a = _kernels.candidate_gain_matrix(gains, beams, printed=(interference_model == "printed"))
    if not np.any(np.diagonal(a) > 0):
        raise ValueError("no UE has positive own-beam gain")
    p, mu, iters, converged = _kernels.kkt_power(a, p_max, n0, inner_tol, max_inner, outer_rel_tol)
    if not converged:
        trace = _trace_inner(a, p_max, n0, mu, max_inner=50)
        raise KktConvergenceError(
            f"power fixed point did not converge within {max_inner} iterations (mu={mu:g})",
            trace,
        )
    return p, mu, iters


def _trace_inner(a, p_max, n0, mu, max_inner) -> list:
    """Short iterate trace at the failing water level, for diagnostics."""
    diag = np.diagonal(a).copy()
    mask = diag > 0
    p = np.where(mask, p_max / a.shape[0], 0.0)
    trace = [p.copy()]
    for _ in range(max_inner):
        interf = a @ p - diag * p
        with np.errstate(divide="ignore", invalid="ignore"):
            target = 1.0 / mu - (interf + n0) / diag
        p = np.where(mask, np.maximum(target, 0.0), 0.0)
        trace.append(p.copy())
    return trace


def _result_from_search(
    search,
    n_beams: int,
    combinations: int,
    extra_diagnostics: dict | None = None,
) -> AllocationResult:
    best_beams, best_p, best_mu, best_rate, evaluated, failures, total_inner, pruned = search
    if best_beams is None:
        raise KktConvergenceError(
            "no feasible candidate assignment produced a converged power solve", []
        )
    diagnostics = {
        "candidates_evaluated": int(evaluated),
        "candidates_pruned": int(pruned),
        "kkt_failures": int(failures),
    }
    if extra_diagnostics:
        diagnostics.update(extra_diagnostics)
    return AllocationResult(
        assignment=assignment_matrix(best_beams, n_beams),
        beams=np.asarray(best_beams, dtype=int),
        power=np.asarray(best_p, dtype=float),
        sum_rate=float(best_rate),
        combinations_evaluated=int(combinations),
        mu=float(best_mu),
        inner_iterations=int(total_inner),
        diagnostics=diagnostics,
    )


def enumerate_optimal(
    eff,
    k_ues: int,
    p_max: float,
    n0: float,
    interference_model: str = "own_channel",
) -> AllocationResult:
    """Exhaustive search over all ordered assignments of K distinct beams.

    Evaluates n_beams! / (n_beams - K)! candidates; ties break to the first
    candidate in lexicographic order.
    """
    gains = _gains_of(eff)
    n_beams = gains.shape[1]
    if k_ues > n_beams:
        raise ValueError(f"cannot assign {k_ues} UEs distinct beams from {n_beams}")
    if gains.shape[0] != k_ues:
        raise ValueError("gain table row count must equal the number of UEs")
    lists = [list(range(n_beams))] * k_ues
    lens = [n_beams] * k_ues
    search = _kernels.argmax_assignment(
        gains, lists, lens, p_max, n0, printed=(interference_model == "printed")
    )
    combos = math.perm(n_beams, k_ues)
    return _result_from_search(search, n_beams, combos)


def rank_beams(power_image) -> np.ndarray:
    """Beam indices by descending measured power; ties break to the lower index."""
    values = power_image.values if isinstance(power_image, BeamImage) else np.asarray(power_image)
    flat = values.ravel()
    return np.argsort(-flat, kind="stable")


def topm_allocate(
    ranked,
    m: int,
    p_max: float,
    n0: float,
    eff,
    interference_model: str = "own_channel",
) -> AllocationResult:
    """Conflict-free allocation over each UE's top-m ranked beams.

    UEs whose strongest beam no other UE claims keep it; the claimed beams
    disappear from the remaining (conflicted) UEs' lists, and those UEs are
    enumerated jointly over their m best remaining candidates. The nominal
    candidate count is m! / (m - c)! for c conflicted UEs. When no
    conflict-free combination exists the lists grow one rank at a time
    (``fallback_extended`` in the diagnostics).

    With m >= n_beams the ranked lists cover the whole codebook; the
    keep-your-strongest-beam shortcut is skipped so the search space matches
    the exhaustive policy exactly.
    """
    ranked = np.asarray(ranked, dtype=int)
    gains = _gains_of(eff)
    k_ues, n_beams = ranked.shape
    if gains.shape != (k_ues, n_beams):
        raise ValueError("gain table shape must match the ranked beam lists")
    if m < 1:
        raise ValueError("m must be >= 1")

    strongest = ranked[:, 0]
    claims = np.bincount(strongest, minlength=n_beams)
    unique_mask = claims[strongest] == 1
    gamma = int(np.sum(unique_mask))
    full_coverage = m >= n_beams
    if full_coverage:
        fixed = np.zeros(k_ues, dtype=bool)
    else:
        fixed = unique_mask
    claimed = set(strongest[fixed].tolist())
    conflicted = int(np.sum(~fixed))

    def build_lists(depth: int):
        lists = []
        lens = []
        for k in range(k_ues):
            if fixed[k]:
                lists.append([int(strongest[k])])
                lens.append(1)
            else:
                filtered = [int(b) for b in ranked[k] if b not in claimed][:depth]
                lists.append(filtered)
                lens.append(len(filtered))
        return lists, lens

    printed = interference_model == "printed"
    depth = min(m, n_beams)
    extended = 0
    while True:
        lists, lens = build_lists(depth)
        search = _kernels.argmax_assignment(gains, lists, lens, p_max, n0, printed=printed)
        if search[0] is not None:
            break
        if depth >= n_beams:
            raise KktConvergenceError(
                "no conflict-free assignment exists even over the full codebook", []
            )
        depth += 1
        extended += 1

    c = conflicted
    combos = math.perm(depth, c) if c <= depth else 0
    extra = {
        "gamma": gamma,
        "conflicted": conflicted,
        "fallback_extended": extended,
        "full_coverage": full_coverage,
    }
    return _result_from_search(search, n_beams, combos, extra)


def conflict_probability(m: int, k_ues: int, gamma: int) -> float:
    """Probability that the conflicted UEs independently pick distinct beams
    from their top-m lists: m! / (m^c (m-c)!) with c = K - gamma.
    """
    c = k_ues - gamma
    if c < 0:
        raise ValueError("gamma cannot exceed the number of UEs")
    if m < 1:
        raise ValueError("m must be >= 1")
    if c > m:
        warnings.warn("more conflicted UEs than candidate beams: conflict is certain")
        return 0.0
    return math.perm(m, c) / m**c


def conflict_probability_mc(m: int, k_ues: int, gamma: int, trials: int, seed) -> float:
    """Monte-Carlo estimate of :func:`conflict_probability` under the same model:
    c = K - gamma independent uniform draws from {1..m}, success iff all distinct.
    """
    c = k_ues - gamma
    if c < 0:
        raise ValueError("gamma cannot exceed the number of UEs")
    if trials < 1:
        raise ValueError("need at least one trial")
    if c == 0:
        return 1.0
    if c > m:
        return 0.0
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, m, size=(trials, c))
    draws.sort(axis=1)
    distinct = np.all(np.diff(draws, axis=1) != 0, axis=1) if c > 1 else np.ones(trials, dtype=bool)
    return float(np.mean(distinct))
