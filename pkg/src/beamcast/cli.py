"""Scenario runner: dataset generation, allocation, evaluation sweeps, conflict checks.

All subcommands are deterministic given the config and seeds, and write
machine-readable outputs (JSON lines / CSV) with no timestamps; wall-clock
info goes to a ``<out>.log`` sidecar. ``BEAMCAST_THREADS`` caps the seed
parallelism of ``evaluate``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels
from .allocator import (
    AllocationResult,
    conflict_probability,
    conflict_probability_mc,
    enumerate_optimal,
    rank_beams,
    sum_rate,
    topm_allocate,
    validate_assignment,
    validate_power,
)
from .channel import Scenario, synthesize_scenario
from .codebook import dft_codebook
from .config import ConfigError, ScenarioConfig, dbm_to_watts
from .estimator import ClampCounter, EffectiveChannelEstimate, ls_effective_channel, reconstruct_amplitude
from .predictor import make_predictor
from .sweep import (
    SweptScenario,
    dataset_header,
    episodes_from_swept,
    read_dataset,
    sweep_scenario,
    write_dataset,
)

RECORD_SCHEMA = 1
EVAL_CSV_COLUMNS = (
    "policy",
    "predictor",
    "p_max_dbm",
    "m",
    "mean_sum_rate",
    "stderr_sum_rate",
    "mean_objective_rate",
    "n_seeds",
)
CONFLICT_CSV_COLUMNS = (
    "m",
    "k_ues",
    "gamma",
    "conflicted",
    "analytic",
    "monte_carlo",
    "trials",
    "abs_error",
    "binomial_sigma",
)


def true_effective_channels(scenario: Scenario, frame: int) -> EffectiveChannelEstimate:
    """Exact h^H w for every UE and beam of one frame."""
    codebook = dft_codebook(scenario.geometry)
    values = np.einsum("ki,ni->kn", scenario.channels[frame].conj(), codebook.matrix)
    return EffectiveChannelEstimate(values=values, provenance="oracle")


@dataclasses.dataclass
class FrameAllocation:
    frame: int
    result: AllocationResult
    realized_sum_rate: float
    clamped_pixels: int


def allocate_scenario(
    config: ScenarioConfig,
    seed: int,
    policy: str,
    predictor_name: str,
    m: int | None = None,
    predictions_path=None,
    episodes=None,
) -> list[FrameAllocation]:
    """Run the full pipeline for one seed: synthesize, sweep, predict, estimate, allocate.

    The solver sees only the predicted effective channels; the realized sum
    rate is re-evaluated afterwards on the true channels of the target frame.
    """
    if policy not in ("optimal", "topm"):
        raise ValueError(f"unknown policy {policy!r}")
    m = config.top_m if m is None else m
    scenario = synthesize_scenario(config, seed)
    swept = sweep_scenario(scenario, config, seed)
    if episodes is None:
        episodes = episodes_from_swept(swept, config.window_s)
    predictor = make_predictor(predictor_name, (config.m_v, config.m_h), predictions_path)

    by_frame: dict[int, dict[int, object]] = {}
    for ep in episodes:
        by_frame.setdefault(ep.frame, {})[ep.ue] = ep

    n0 = config.noise_power_w
    p_max = config.p_max_w
    sweep_p = config.sweep_power_w
    allocations: list[FrameAllocation] = []
    for t in sorted(by_frame):
        per_ue = by_frame[t]
        if len(per_ue) != config.k_ues:
            raise ValueError(f"frame {t}: episodes cover {len(per_ue)} of {config.k_ues} UEs")
        target_frame = t + 1
        counter = ClampCounter()
        eff_rows = np.empty((config.k_ues, config.m_tx), dtype=np.complex128)
        ranked = np.empty((config.k_ues, config.m_tx), dtype=int)
        for k in range(config.k_ues):
            episode = per_ue[k]
            truth_images = swept.high[target_frame][k]
            ground_truth = (truth_images.real_sq, truth_images.imag_sq)
            re_sq, im_sq = predictor.predict(episode, ground_truth=ground_truth)
            signs = None
            if config.sign_mode == "preserve" and predictor_name == "oracle":
                signs = (truth_images.sign_real, truth_images.sign_imag)
            r_hat = reconstruct_amplitude(re_sq, im_sq, signs, counter)
            eff_rows[k] = ls_effective_channel(r_hat.ravel(), 1.0, sweep_p)
            ranked[k] = rank_beams(np.maximum(re_sq, 0.0) + np.maximum(im_sq, 0.0))
        eff = EffectiveChannelEstimate(values=eff_rows, provenance="ls_from_prediction")
        if policy == "optimal":
            result = enumerate_optimal(eff, config.k_ues, p_max, n0, config.interference_model)
        else:
            result = topm_allocate(ranked, m, p_max, n0, eff, config.interference_model)
        validate_assignment(result.assignment)
        validate_power(result.power, p_max)
        truth = true_effective_channels(scenario, target_frame)
        realized = sum_rate(result.beams, result.power, truth, n0, config.interference_model)
        allocations.append(
            FrameAllocation(
                frame=target_frame,
                result=result,
                realized_sum_rate=realized,
                clamped_pixels=counter.count,
            )
        )
    return allocations


def allocation_record(
    config: ScenarioConfig,
    seed: int,
    policy: str,
    predictor_name: str,
    m: int | None,
    alloc: FrameAllocation,
) -> dict:
    res = alloc.result
    record = {
        "schema": RECORD_SCHEMA,
        "seed": seed,
        "frame": alloc.frame,
        "policy": policy,
        "predictor": predictor_name,
        "m": config.top_m if m is None else m,
        "p_max_dbm": config.p_max_dbm,
        "sum_rate": res.sum_rate,
        "realized_sum_rate": alloc.realized_sum_rate,
        "beams": [int(b) for b in res.beams],
        "power_w": [float(p) for p in res.power],
        "mu": res.mu,
        "inner_iterations": res.inner_iterations,
        "combinations_evaluated": res.combinations_evaluated,
        "clamped_pixels": alloc.clamped_pixels,
    }
    record.update(res.diagnostics)
    return record


# ---------------------------------------------------------------------------
# subcommands


def run_generate(config: ScenarioConfig, seed: int, out: Path) -> dict:
    scenario = synthesize_scenario(config, seed)
    swept = sweep_scenario(scenario, config, seed)
    episodes = episodes_from_swept(swept, config.window_s)
    header = dataset_header(config, seed, len(episodes))
    write_dataset(episodes, out, header)
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    return {"episodes": len(episodes), "seed": seed, "sha256": digest, "path": str(out)}


def run_allocate(
    config: ScenarioConfig,
    seed: int,
    policy: str,
    predictor_name: str,
    out: Path,
    m: int | None = None,
    predictions_path=None,
    dataset_path=None,
) -> dict:
    episodes = None
    if dataset_path is not None:
        header, episodes = read_dataset(dataset_path)
        mismatches = [
            name
            for name, got, want in (
                ("K", header.k_ues, config.k_ues),
                ("M_v", header.m_v, config.m_v),
                ("M_h", header.m_h, config.m_h),
                ("s", header.s, config.window_s),
                ("seed", header.seed, seed),
            )
            if got != want
        ]
        if mismatches:
            raise ValueError(f"dataset header disagrees with config/seed on: {', '.join(mismatches)}")
    allocations = allocate_scenario(
        config, seed, policy, predictor_name, m, predictions_path, episodes
    )
    with open(out, "w") as fh:
        for alloc in allocations:
            fh.write(json.dumps(allocation_record(config, seed, policy, predictor_name, m, alloc), sort_keys=True))
            fh.write("\n")
    rates = [a.realized_sum_rate for a in allocations]
    return {
        "frames": len(allocations),
        "mean_realized_sum_rate": float(np.mean(rates)) if rates else 0.0,
        "path": str(out),
    }


def _worker_threads() -> int:
    env = os.environ.get("BEAMCAST_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _evaluate_cell(config, seed, policy, predictor_name, m):
    allocations = allocate_scenario(config, seed, policy, predictor_name, m)
    realized = float(np.mean([a.realized_sum_rate for a in allocations]))
    objective = float(np.mean([a.result.sum_rate for a in allocations]))
    return realized, objective


def run_evaluate(
    config: ScenarioConfig,
    policies: list[str],
    predictors: list[str],
    m_values: list[int],
    p_max_values_dbm: list[float],
    out: Path,
) -> dict:
    """Mean sum-rate with standard error per (policy, predictor, P_max, m) over the config seeds."""
    cells = []
    for policy in policies:
        for predictor_name in predictors:
            for p_dbm in p_max_values_dbm:
                for m in m_values:
                    cells.append((policy, predictor_name, p_dbm, m))
    rows = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=_worker_threads()) as pool:
        for policy, predictor_name, p_dbm, m in cells:
            cell_cfg = dataclasses.replace(config, p_max_dbm=p_dbm)
            futures = {
                seed: pool.submit(_evaluate_cell, cell_cfg, seed, policy, predictor_name, m)
                for seed in config.seeds
            }
            realized = np.array([futures[s].result()[0] for s in sorted(futures)])
            objective = np.array([futures[s].result()[1] for s in sorted(futures)])
            stderr = float(realized.std(ddof=1) / math.sqrt(len(realized))) if len(realized) > 1 else 0.0
            rows.append(
                (
                    policy,
                    predictor_name,
                    p_dbm,
                    m,
                    float(realized.mean()),
                    stderr,
                    float(objective.mean()),
                    len(realized),
                )
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    with open(out, "w") as fh:
        fh.write(",".join(EVAL_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return {"rows": len(rows), "path": str(out)}


def run_conflict(
    m_values: list[int],
    k_ues: int,
    gamma_values: list[int],
    trials: int,
    seed: int,
    out: Path,
) -> dict:
    rows = []
    for m in m_values:
        for gamma in gamma_values:
            if gamma > k_ues:
                continue
            c = k_ues - gamma
            analytic = conflict_probability(m, k_ues, gamma) if c <= m else 0.0
            mc = conflict_probability_mc(m, k_ues, gamma, trials, np.random.SeedSequence([seed, m, gamma]))
            sigma = math.sqrt(max(analytic * (1 - analytic), 0.0) / trials)
            rows.append((m, k_ues, gamma, c, analytic, mc, trials, abs(analytic - mc), sigma))
    with open(out, "w") as fh:
        fh.write(",".join(CONFLICT_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return {"rows": len(rows), "path": str(out)}


def run_plotscript(csv_path: Path, out: Path) -> dict:
    """Emit a gnuplot script that plots an evaluate CSV (rate vs P_max per curve)."""
    lines = [
        "set datafile separator ','",
        "set key outside",
        "set xlabel 'P_max (dBm)'",
        "set ylabel 'mean sum rate (bits/s/Hz)'",
        "set style data linespoints",
    ]
    curves = []
    with open(csv_path) as fh:
        header = fh.readline().strip().split(",")
        idx = {name: i for i, name in enumerate(header)}
        seen = []
        for line in fh:
            parts = line.strip().split(",")
            key = (parts[idx["policy"]], parts[idx["predictor"]], parts[idx["m"]])
            if key not in seen:
                seen.append(key)
    for policy, predictor_name, m in seen:
        cond = (
            f"(strcol({idx['policy'] + 1}) eq '{policy}' && "
            f"strcol({idx['predictor'] + 1}) eq '{predictor_name}' && "
            f"strcol({idx['m'] + 1}) eq '{m}')"
        )
        curves.append(
            f"'{csv_path}' using {idx['p_max_dbm'] + 1}:({cond} ? column({idx['mean_sum_rate'] + 1}) : 1/0) "
            f"title '{policy}/{predictor_name}/m={m}'"
        )
    lines.append("plot \\\n  " + ", \\\n  ".join(curves))
    out.write_text("\n".join(lines) + "\n")
    return {"curves": len(curves), "path": str(out)}


# ---------------------------------------------------------------------------
# argument parsing


def _load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "m", None) is not None:
        overrides["top_m"] = args.m
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a scenario and write the episode dataset")
    gen.add_argument("--config", type=Path, default=None)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", type=Path, required=True)

    alloc = sub.add_parser("allocate", help="run a policy over every frame of one seed")
    alloc.add_argument("--config", type=Path, default=None)
    alloc.add_argument("--seed", type=int, default=None)
    alloc.add_argument("--policy", choices=["optimal", "topm"], default="topm")
    alloc.add_argument(
        "--predictor",
        choices=["oracle", "persistence", "bilinear", "bicubic", "external"],
        default="oracle",
    )
    alloc.add_argument("--predictions", type=Path, default=None)
    alloc.add_argument("--dataset", type=Path, default=None)
    alloc.add_argument("--m", type=int, default=None)
    alloc.add_argument("--out", type=Path, required=True)

    ev = sub.add_parser("evaluate", help="sweep P_max and m; write a CSV of mean rates")
    ev.add_argument("--config", type=Path, default=None)
    ev.add_argument("--policies", type=str, default="topm")
    ev.add_argument("--predictors", type=str, default="oracle")
    ev.add_argument("--m-list", type=str, default=None)
    ev.add_argument("--pmax-list", type=str, default=None)
    ev.add_argument("--out", type=Path, required=True)

    con = sub.add_parser("conflict", help="compare the conflict-free probability against Monte Carlo")
    con.add_argument("--m-list", type=str, default="2,3,4,5,6,7,8,9,10")
    con.add_argument("--k", type=int, default=4)
    con.add_argument("--gamma-list", type=str, default=None)
    con.add_argument("--trials", type=int, default=100_000)
    con.add_argument("--seed", type=int, default=0)
    con.add_argument("--out", type=Path, required=True)

    plot = sub.add_parser("plotscript", help="emit a gnuplot script for an evaluate CSV")
    plot.add_argument("--csv", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out: Path | None = getattr(args, "out", None)
    started = time.time()
    try:
        summary = _dispatch(args)
    except (ConfigError, ValueError, OSError) as exc:
        if out is not None and out.exists():
            out.unlink()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True))
    if out is not None:
        sidecar = out.with_suffix(out.suffix + ".log")
        sidecar.write_text(
            f"command={args.command}\nelapsed_s={time.time() - started:.3f}\n"
            f"kernel={_kernels.IMPLEMENTATION}\n"
        )
    return 0


def _dispatch(args) -> dict:
    if args.command == "generate":
        cfg = _load_config(args)
        seed = args.seed if args.seed is not None else cfg.seeds[0]
        return run_generate(cfg, seed, args.out)
    if args.command == "allocate":
        cfg = _load_config(args)
        seed = args.seed if args.seed is not None else cfg.seeds[0]
        return run_allocate(
            cfg,
            seed,
            args.policy,
            args.predictor,
            args.out,
            m=args.m,
            predictions_path=args.predictions,
            dataset_path=args.dataset,
        )
    if args.command == "evaluate":
        cfg = _load_config(args)
        policies = [p.strip() for p in args.policies.split(",") if p.strip()]
        predictors = [p.strip() for p in args.predictors.split(",") if p.strip()]
        m_values = _parse_int_list(args.m_list) if args.m_list else [cfg.top_m]
        p_values = _parse_float_list(args.pmax_list) if args.pmax_list else list(cfg.p_max_sweep_dbm)
        return run_evaluate(cfg, policies, predictors, m_values, p_values, args.out)
    if args.command == "conflict":
        m_values = _parse_int_list(args.m_list)
        gamma_values = (
            _parse_int_list(args.gamma_list) if args.gamma_list else list(range(args.k + 1))
        )
        return run_conflict(m_values, args.k, gamma_values, args.trials, args.seed, args.out)
    if args.command == "plotscript":
        return run_plotscript(args.csv, args.out)
    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
