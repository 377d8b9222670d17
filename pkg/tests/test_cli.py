import json
import subprocess
import sys

import numpy as np
import pytest

from beamcast.cli import main, run_allocate, run_generate
from beamcast.config import ScenarioConfig, write_default_config
from beamcast.sweep import read_dataset

SMALL = """
m_v = 4
m_h = 4
m_v_low = 2
m_h_low = 2
k_ues = 2
frames = 4
window_s = 1
top_m = 4
seeds = 0, 1
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def test_generate_writes_valid_dataset(tmp_path, small_config):
    out = tmp_path / "data.bin"
    rc = main(["generate", "--config", str(small_config), "--seed", "3", "--out", str(out)])
    assert rc == 0
    header, episodes = read_dataset(out)
    assert header.k_ues == 2
    assert header.seed == 3
    assert len(episodes) == 2 * (4 - 1)


def test_generate_default_table_values(tmp_path):
    out = tmp_path / "data.bin"
    cfg = ScenarioConfig(frames=4)
    summary = run_generate(cfg, 0, out)
    header, _ = read_dataset(out)
    assert (header.m_v, header.m_h, header.m_v_low, header.m_h_low) == (8, 8, 4, 4)
    assert summary["episodes"] == header.records


def test_generate_deterministic_bytes(tmp_path, small_config):
    out1 = tmp_path / "a.bin"
    out2 = tmp_path / "b.bin"
    main(["generate", "--config", str(small_config), "--seed", "0", "--out", str(out1)])
    main(["generate", "--config", str(small_config), "--seed", "0", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_allocate_records(tmp_path, small_config):
    out = tmp_path / "alloc.jsonl"
    rc = main(
        [
            "allocate",
            "--config",
            str(small_config),
            "--seed",
            "0",
            "--policy",
            "topm",
            "--predictor",
            "bilinear",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 3  # frames - s
    for rec in records:
        assert rec["policy"] == "topm"
        assert rec["predictor"] == "bilinear"
        assert rec["realized_sum_rate"] >= 0
        assert len(rec["beams"]) == 2
        assert sum(rec["power_w"]) <= 10 ** ((12.0 - 30) / 10) * (1 + 1e-9)


def test_allocate_from_dataset_validates_header(tmp_path, small_config):
    data = tmp_path / "d.bin"
    main(["generate", "--config", str(small_config), "--seed", "0", "--out", str(data)])
    out = tmp_path / "alloc.jsonl"
    rc = main(
        [
            "allocate",
            "--config",
            str(small_config),
            "--seed",
            "1",  # wrong seed for this dataset
            "--dataset",
            str(data),
            "--out",
            str(out),
        ]
    )
    assert rc == 2
    assert not out.exists()


def test_allocate_optimal_policy(tmp_path, small_config):
    out = tmp_path / "opt.jsonl"
    rc = main(
        [
            "allocate",
            "--config",
            str(small_config),
            "--policy",
            "optimal",
            "--predictor",
            "oracle",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert all(r["combinations_evaluated"] == 16 * 15 for r in records)


def test_evaluate_csv(tmp_path, small_config):
    out = tmp_path / "eval.csv"
    rc = main(
        [
            "evaluate",
            "--config",
            str(small_config),
            "--policies",
            "topm",
            "--predictors",
            "oracle,bilinear",
            "--m-list",
            "2,4",
            "--pmax-list",
            "0,12",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("policy,predictor,p_max_dbm,m,mean_sum_rate")
    assert len(lines) == 1 + 1 * 2 * 2 * 2
    # deterministic rerun
    out2 = tmp_path / "eval2.csv"
    main(
        [
            "evaluate",
            "--config",
            str(small_config),
            "--policies",
            "topm",
            "--predictors",
            "oracle,bilinear",
            "--m-list",
            "2,4",
            "--pmax-list",
            "0,12",
            "--out",
            str(out2),
        ]
    )
    assert out.read_text() == out2.read_text()


def test_evaluate_thread_cap_consistency(tmp_path, small_config, monkeypatch):
    out1 = tmp_path / "t1.csv"
    monkeypatch.setenv("BEAMCAST_THREADS", "1")
    main(["evaluate", "--config", str(small_config), "--m-list", "4", "--pmax-list", "12", "--out", str(out1)])
    out4 = tmp_path / "t4.csv"
    monkeypatch.setenv("BEAMCAST_THREADS", "4")
    main(["evaluate", "--config", str(small_config), "--m-list", "4", "--pmax-list", "12", "--out", str(out4)])
    assert out1.read_text() == out4.read_text()


def test_conflict_csv(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(
        ["conflict", "--m-list", "4", "--k", "4", "--gamma-list", "2", "--trials", "20000", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    row = dict(zip(header, lines[1].split(",")))
    assert float(row["analytic"]) == pytest.approx(0.75)
    assert abs(float(row["monte_carlo"]) - 0.75) < 4 * float(row["binomial_sigma"]) + 1e-9


def test_plotscript(tmp_path, small_config):
    csv = tmp_path / "eval.csv"
    main(["evaluate", "--config", str(small_config), "--m-list", "4", "--pmax-list", "0,12", "--out", str(csv)])
    gp = tmp_path / "plot.gp"
    rc = main(["plotscript", "--csv", str(csv), "--out", str(gp)])
    assert rc == 0
    assert "plot" in gp.read_text()


@pytest.mark.parametrize(
    "extra",
    [
        "lowres_mode = wide_beam",
        "sign_mode = paper",
        "interference_model = printed",
        "inner_mtx_scaling = false",
    ],
)
def test_pipeline_config_variants(tmp_path, extra):
    cfg = tmp_path / "variant.cfg"
    cfg.write_text(SMALL + extra + "\n")
    out = tmp_path / "v.jsonl"
    rc = main(
        ["allocate", "--config", str(cfg), "--seed", "0", "--policy", "topm",
         "--predictor", "oracle", "--out", str(out)]
    )
    assert rc == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 3
    assert all(np.isfinite(r["realized_sum_rate"]) for r in records)


def test_bad_config_key_exits_nonzero(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frames = 4\nnot_a_key = 2\n")
    out = tmp_path / "x.bin"
    rc = main(["generate", "--config", str(cfg), "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_default_config_file_roundtrip(tmp_path):
    path = tmp_path / "defaults.cfg"
    write_default_config(path)
    cfg = ScenarioConfig.from_file(path)
    assert cfg == ScenarioConfig()


def test_console_entrypoint_runs(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "beamcast", "conflict", "--m-list", "3", "--k", "2",
         "--gamma-list", "1", "--trials", "1000", "--out", str(tmp_path / "c.csv")],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
