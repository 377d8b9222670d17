"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py

Times the two hot paths on representative instances: the water-filling power
solve for a single assignment, and the full assignment search at the
reduced-instance scale (16 beams, 3 UEs, 3360 candidates).
"""

import time

import numpy as np

from beamcast._kernels import _pure

try:
    from beamcast._kernels import _core
except ImportError:
    _core = None

from beamcast.channel import synthesize_scenario
from beamcast.cli import true_effective_channels
from beamcast.config import ScenarioConfig


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kkt(impl, gains, beams, p_max, n0, repeats=200):
    a = gains[:, beams]
    return _time(lambda: impl.kkt_power(a, p_max, n0), repeats)


def bench_search(impl, gains, p_max, n0, repeats=3):
    k, n = gains.shape
    lists = [list(range(n))] * k
    lens = [n] * k
    return _time(lambda: impl.argmax_assignment(gains, lists, lens, p_max, n0), repeats)


def main():
    cfg = ScenarioConfig(m_v=4, m_h=4, m_v_low=2, m_h_low=2, k_ues=3, frames=2)
    scenario = synthesize_scenario(cfg, 0)
    gains = true_effective_channels(scenario, 0).gains
    p_max, n0 = cfg.p_max_w, cfg.noise_power_w
    beams = np.array([0, 1, 2])

    impls = [("pure", _pure)] + ([("compiled", _core)] if _core is not None else [])
    print(f"{'kernel':<10} {'kkt_power':>12} {'argmax (3360 cands)':>22}")
    rows = {}
    for name, impl in impls:
        t_kkt = bench_kkt(impl, gains, beams, p_max, n0)
        t_search = bench_search(impl, gains, p_max, n0, repeats=1 if name == "pure" else 5)
        rows[name] = (t_kkt, t_search)
        print(f"{name:<10} {t_kkt * 1e6:>9.1f} us {t_search * 1e3:>17.1f} ms")
    if "compiled" in rows and "pure" in rows:
        print(
            f"{'speedup':<10} {rows['pure'][0] / rows['compiled'][0]:>10.0f}x "
            f"{rows['pure'][1] / rows['compiled'][1]:>20.0f}x"
        )


if __name__ == "__main__":
    main()
