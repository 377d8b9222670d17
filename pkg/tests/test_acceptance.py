"""Acceptance suite: one test per primary criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance is pinned here; nothing is calibrated at runtime.
"""

import math
import time

import numpy as np
import pytest

from beamcast.allocator import (
    conflict_probability,
    conflict_probability_mc,
    enumerate_optimal,
    power_allocate_kkt,
    rank_beams,
    topm_allocate,
    validate_assignment,
    validate_power,
)
from beamcast.channel import UpaGeometry, steering, synthesize_scenario
from beamcast.cli import allocate_scenario, run_generate, true_effective_channels
from beamcast.codebook import dft_codebook
from beamcast.config import ScenarioConfig
from beamcast.estimator import ls_effective_channel, reconstruct_amplitude
from beamcast.sweep import read_dataset, sweep_high_res, write_dataset

from oracles import exhaustive_beam_power_search, grid_power_search, sum_rate_direct

TINY = ScenarioConfig(m_v=2, m_h=2, m_v_low=1, m_h_low=1, k_ues=2, frames=3)
N0 = TINY.noise_power_w
PMAX = TINY.p_max_w


def _tiny_gains(seed: int) -> np.ndarray:
    scenario = synthesize_scenario(TINY, seed)
    return true_effective_channels(scenario, 0).gains


def _report(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE PASS: {name}{suffix}")


def test_conflict_probability_against_monte_carlo():
    """Closed-form conflict-free probability matches Monte Carlo within 3 sigma."""
    started = time.perf_counter()
    trials = 100_000
    checked = 0
    for m in range(2, 11):
        for c in range(0, m + 1):
            k_ues, gamma = c, 0  # K - gamma = c
            analytic = conflict_probability(m, k_ues, gamma)
            mc = conflict_probability_mc(
                m, k_ues, gamma, trials, np.random.SeedSequence([0, m, gamma])
            )
            sigma = math.sqrt(analytic * (1.0 - analytic) / trials)
            assert abs(mc - analytic) <= 3.0 * sigma + 1e-15, (
                f"m={m} c={c}: analytic {analytic} vs mc {mc} (sigma {sigma})"
            )
            checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"runtime {elapsed:.1f}s exceeds 10s"
    _report("Eq-16 conflict probability vs Monte Carlo", f"{checked} combos, {elapsed:.1f}s")


def test_kkt_solver_against_grid_oracle():
    """Water-filling stationary point within 1e-2 bits of a grid search, 50 instances."""
    started = time.perf_counter()
    for seed in range(50):
        gains = _tiny_gains(seed)
        result = enumerate_optimal(gains, 2, PMAX, N0)
        p, mu, _ = power_allocate_kkt(result.beams, gains, PMAX, N0)
        a = gains[:, result.beams]
        kkt_rate = sum_rate_direct(a, p, N0)
        grid_rate, _ = grid_power_search(a, PMAX, N0, step_frac=1e-3)
        assert kkt_rate >= grid_rate - 1e-2, (
            f"seed {seed}: kkt {kkt_rate:.6f} vs grid {grid_rate:.6f}"
        )
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"runtime {elapsed:.1f}s exceeds 60s"
    _report("KKT power solver vs grid-search oracle", f"50 instances, {elapsed:.1f}s")


def test_enumeration_matches_independent_exhaustive_search():
    """Optimal enumeration equals an independently coded search within 1e-2 bits."""
    for seed in range(20):
        gains = _tiny_gains(seed)
        result = enumerate_optimal(gains, 2, PMAX, N0)
        oracle_rate, oracle_beams, _ = exhaustive_beam_power_search(gains, PMAX, N0)
        assert abs(result.sum_rate - oracle_rate) <= 1e-2, (
            f"seed {seed}: enumerate {result.sum_rate:.6f} vs oracle {oracle_rate:.6f} "
            f"(beams {result.beams} vs {oracle_beams})"
        )
    _report("optimal enumeration vs independent exhaustive oracle", "20 instances")


def test_topm_dominance_and_full_coverage():
    """topm(m=M_tx) equals the optimum exactly; truncated m never exceeds it."""
    for seed in range(20):
        gains = _tiny_gains(seed)
        ranked = np.stack([rank_beams(gains[k].reshape(2, 2)) for k in range(2)])
        best = enumerate_optimal(gains, 2, PMAX, N0)
        full = topm_allocate(ranked, m=4, p_max=PMAX, n0=N0, eff=gains)
        assert full.sum_rate == best.sum_rate, (
            f"seed {seed}: coverage mismatch {full.sum_rate} vs {best.sum_rate}"
        )
        for m in (1, 2, 3):
            truncated = topm_allocate(ranked, m=m, p_max=PMAX, n0=N0, eff=gains)
            assert truncated.sum_rate <= best.sum_rate + 1e-12
    _report("top-m coverage equality and dominance", "20 instances, m in {1,2,3,4}")


def test_sum_rate_trend_in_m():
    """Mean rate nondecreasing over m in {4, 10, 30}; topm(30) within 5% of optimal
    on the reduced instance where the optimum is computable."""
    started = time.perf_counter()
    seeds = range(100)

    # desk-scale trend: full pipeline with the oracle predictor at 8x8, K=4
    trend_cfg = ScenarioConfig(k_ues=4, frames=2, window_s=1)
    rates = {m: [] for m in (4, 10, 30)}
    for seed in seeds:
        for m in rates:
            allocations = allocate_scenario(trend_cfg, seed, "topm", "oracle", m=m)
            rates[m].append(np.mean([a.realized_sum_rate for a in allocations]))
    means = {m: float(np.mean(rates[m])) for m in rates}
    for lo, hi in ((4, 10), (10, 30)):
        diff = np.asarray(rates[hi]) - np.asarray(rates[lo])
        margin = 2.0 * diff.std(ddof=1) / math.sqrt(len(diff))
        assert diff.mean() >= -margin, (
            f"mean rate decreased from m={lo} ({means[lo]:.3f}) to m={hi} ({means[hi]:.3f})"
        )

    # reduced instance: 4x4 UPA, K=3 => 16*15*14 = 3360 enumerations
    reduced_cfg = ScenarioConfig(m_v=4, m_h=4, m_v_low=2, m_h_low=2, k_ues=3, frames=2, window_s=1)
    topm_mean = []
    optimal_mean = []
    for seed in seeds:
        opt = allocate_scenario(reduced_cfg, seed, "optimal", "oracle")
        assert all(a.result.combinations_evaluated == 3360 for a in opt)
        top = allocate_scenario(reduced_cfg, seed, "topm", "oracle", m=30)
        optimal_mean.append(np.mean([a.realized_sum_rate for a in opt]))
        topm_mean.append(np.mean([a.realized_sum_rate for a in top]))
    ratio = float(np.mean(topm_mean) / np.mean(optimal_mean))
    assert ratio >= 0.95, f"topm(m=30) at {ratio:.4f} of optimal"
    elapsed = time.perf_counter() - started
    assert elapsed < 600.0, f"runtime {elapsed:.1f}s exceeds 10 minutes"
    _report(
        "sum-rate trend in m and near-optimality",
        f"means {means[4]:.3f}/{means[10]:.3f}/{means[30]:.3f} bits, "
        f"topm(30)={ratio:.4f} of optimal, {elapsed:.0f}s",
    )


def test_ls_identity_on_noiseless_sweeps():
    """Noiseless sweep -> signed reconstruction -> LS reproduces h^H w to 1e-12."""
    geometry = UpaGeometry.from_carrier(8, 8, 60e9)
    book = dft_codebook(geometry)
    rng = np.random.default_rng(2024)
    p = 2.0
    worst = 0.0
    for _ in range(1000):
        h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        images = sweep_high_res(h, book, p=p, noise_power=0.0, seed=0)
        r_hat = reconstruct_amplitude(
            images.real_sq, images.imag_sq, signs=(images.sign_real, images.sign_imag)
        ).ravel()
        estimate = ls_effective_channel(r_hat, 1.0, p)
        expected = book.matrix @ h.conj()
        rel = np.abs(estimate - expected) / np.abs(expected)
        worst = max(worst, float(rel.max()))
    assert worst <= 1e-12, f"worst relative error {worst:.3e}"
    _report("LS effective-channel identity", f"1000 channels, worst rel err {worst:.2e}")


def test_structural_invariants(tmp_path):
    """Codebook/steering/image/feasibility/count/round-trip invariants."""
    rng = np.random.default_rng(7)

    # codebook orthonormality at 1e-10
    book = dft_codebook(UpaGeometry.from_carrier(8, 8, 60e9))
    gram = book.matrix @ book.matrix.conj().T
    assert np.max(np.abs(gram - np.eye(64))) < 1e-10

    # steering unit modulus at 1e-12
    geom = UpaGeometry.from_carrier(8, 8, 60e9)
    for _ in range(200):
        vec = steering(rng.uniform(-math.pi, math.pi), rng.uniform(0, math.pi), geom)
        assert np.max(np.abs(np.abs(vec) - 1.0)) < 1e-12

    # power image decomposition is exact
    h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    images = sweep_high_res(h, book, p=1.0, noise_power=1e-3, seed=3)
    np.testing.assert_array_equal(
        images.power.values, images.real_sq.values + images.imag_sq.values
    )

    # solver outputs satisfy the assignment and power constraints
    for seed in range(10):
        gains = _tiny_gains(seed)
        result = enumerate_optimal(gains, 2, PMAX, N0)
        validate_assignment(result.assignment)
        validate_power(result.power, PMAX)
        ranked = np.stack([rank_beams(gains[k].reshape(2, 2)) for k in range(2)])
        result = topm_allocate(ranked, m=2, p_max=PMAX, n0=N0, eff=gains)
        validate_assignment(result.assignment)
        validate_power(result.power, PMAX)

    # convex combinations of feasible power vectors stay feasible (1000 pairs)
    for _ in range(1000):
        k = int(rng.integers(1, 6))
        p = rng.uniform(0, 1, k)
        q = rng.uniform(0, 1, k)
        p *= rng.uniform(0, 1) / max(p.sum(), 1e-12)
        q *= rng.uniform(0, 1) / max(q.sum(), 1e-12)
        lam = float(rng.uniform(0, 1))
        validate_power(lam * p + (1 - lam) * q, 1.0)

    # exact combination counts
    gains64 = np.zeros((4, 64))
    gains64[:, :4] = np.eye(4)
    assert enumerate_optimal(gains64, 4, 1.0, 0.1).combinations_evaluated == 64 * 63 * 62 * 61
    gains_small = _tiny_gains(0)
    assert enumerate_optimal(gains_small, 2, PMAX, N0).combinations_evaluated == 12
    shared = np.array([[10.0, 5.0, 0.1, 0.1], [9.0, 4.0, 0.1, 0.1]])
    ranked = np.stack([rank_beams(shared[k].reshape(2, 2)) for k in range(2)])
    result = topm_allocate(ranked, m=2, p_max=1.0, n0=0.1, eff=shared)
    assert result.combinations_evaluated == 2  # I' = m!/(m-c)! with c = 2

    # dataset round trip is bit-exact
    cfg = ScenarioConfig(m_v=4, m_h=4, m_v_low=2, m_h_low=2, k_ues=2, frames=4, window_s=1)
    out = tmp_path / "roundtrip.bin"
    run_generate(cfg, 5, out)
    header, episodes = read_dataset(out)
    rewritten = tmp_path / "rewritten.bin"
    write_dataset(episodes, rewritten, header)
    assert out.read_bytes() == rewritten.read_bytes()

    _report("structural invariants suite")
