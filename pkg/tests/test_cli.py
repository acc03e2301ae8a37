import json
import math
import os

import numpy as np
import pytest

from coordmd.cli import main


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


QUERY = {
    "p0": [0.5, 0.5],
    "target_channel": {
        "given_axes": [2], "out_axes": [2],
        "probs": [1.0, 0.0, 0.0, 1.0],
    },
    "deltas": [0.5, 0.5, 0.0],
}

# Y1 = Y2 = 0 always, Y12 = X; flattened row-major over (x, y1, y2, y12)
CONST_REFINE_CAND = {
    "theorem": 1,
    "cond": {
        "given_axes": [2], "out_axes": [2, 2, 2],
        "probs": [1.0] + [0.0] * 8 + [1.0] + [0.0] * 6,
    },
}

SIMULATE_CFG = {
    "query": QUERY,
    "candidate": CONST_REFINE_CAND,
    "rates": [0.45, 0.45],
    "rate_slacks": [0.0, 0.0],
    "epsilon": 0.35,
    "n_values": [8],
    "trials": 24,
    "master_seed": 7,
}


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_config_file_exits_one(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_malformed_json_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_key_reports_which(tmp_path, capsys):
    cfg = dict(SIMULATE_CFG)
    del cfg["epsilon"]
    path = write_json(tmp_path / "cfg.json", cfg)
    assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == 1
    assert "epsilon" in capsys.readouterr().err


def test_simulate_csv_and_manifest(tmp_path, capsys):
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    out = tmp_path / "run"
    assert main(["simulate", "--config", path, "--out", str(out),
                 "--workers", "1"]) == 0
    csv = (out / "simulate.csv").read_text().splitlines()
    assert csv[0] == "n,scenario,mean_tv,std_err,case_a,case_b,case_c"
    assert len(csv) == 4  # header + three scenarios
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["config"]["master_seed"] == 7
    assert manifest["outputs"] == ["simulate.csv"]


def test_simulate_replay_byte_identical_across_workers(tmp_path):
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    out1 = tmp_path / "a"
    assert main(["simulate", "--config", path, "--out", str(out1),
                 "--workers", "1"]) == 0
    out2 = tmp_path / "b"
    assert main(["replay", str(out1 / "manifest.json"), "--out", str(out2),
                 "--workers", "2"]) == 0
    assert read(out1 / "simulate.csv") == read(out2 / "simulate.csv")
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    m1.pop("created_at"), m2.pop("created_at")
    assert m1 == m2


def test_seed_override_lands_in_manifest_and_output(tmp_path):
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    out1, out2, out3 = tmp_path / "s7", tmp_path / "s9", tmp_path / "s9b"
    assert main(["simulate", "--config", path, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", path, "--out", str(out2),
                 "--seed", "9"]) == 0
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m2["config"]["master_seed"] == 9
    assert read(out1 / "simulate.csv") != read(out2 / "simulate.csv")
    # replay of the overridden run reproduces the override
    assert main(["replay", str(out2 / "manifest.json"), "--out", str(out3)]) == 0
    assert read(out2 / "simulate.csv") == read(out3 / "simulate.csv")


def test_simulate_json_format(tmp_path):
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    out = tmp_path / "run"
    assert main(["simulate", "--config", path, "--out", str(out),
                 "--format", "json"]) == 0
    rows = json.loads((out / "simulate.json").read_text())
    assert {r["scenario"] for r in rows} == {1, 2, 12}
    assert all(0.0 <= r["mean_tv"] <= 1.0 for r in rows)


def test_budget_env_var_exits_one(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("COORDMD_BUDGET", "4")
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == 1
    assert "budget" in capsys.readouterr().err.lower()


def test_region_trace_csv(tmp_path, capsys):
    cfg = {
        "query": QUERY,
        "theorem": 1,
        "search": {"grid_step": 2, "restarts": 8, "refine_iters": 100, "seed": 1},
    }
    path = write_json(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["region", "trace", "--config", path, "--out", str(out)]) == 0
    lines = (out / "frontier.csv").read_text().splitlines()
    assert lines[0] == "R1,R2,rsum,witness_id"
    rsums = [float(l.split(",")[2]) for l in lines[1:]]
    # refinement-only coordination: min sum rate is ln 2
    assert min(rsums) == pytest.approx(math.log(2), abs=0.02)
    wit = json.loads((out / "witnesses.json").read_text())
    ids = {l.split(",")[3] for l in lines[1:]}
    assert ids <= set(wit["witnesses"])


def test_region_trace_replay_byte_identical(tmp_path):
    cfg = {
        "query": QUERY,
        "theorem": 1,
        "search": {"grid_step": 2, "restarts": 4, "refine_iters": 50, "seed": 5},
    }
    path = write_json(tmp_path / "cfg.json", cfg)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["region", "trace", "--config", path, "--out", str(out1)]) == 0
    assert main(["replay", str(out1 / "manifest.json"), "--out", str(out2),
                 "--workers", "2"]) == 0
    assert read(out1 / "frontier.csv") == read(out2 / "frontier.csv")
    assert read(out1 / "witnesses.json") == read(out2 / "witnesses.json")


def test_region_check(tmp_path, capsys):
    ln2 = math.log(2)
    cfg = {
        "query": {**QUERY, "deltas": [0.0, 0.0, 0.0]},
        "theorem": 1,
        "point": [ln2, ln2],
        "search": {"grid_step": 2, "restarts": 8, "refine_iters": 100, "seed": 3},
    }
    path = write_json(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["region", "check", "--config", path, "--out", str(out)]) == 0
    result = json.loads((out / "check.json").read_text())
    assert result["achievable"] is True
    assert result["witness"] is not None
    cfg["point"] = [0.1, 0.1]
    path2 = write_json(tmp_path / "cfg2.json", cfg)
    out2 = tmp_path / "run2"
    assert main(["region", "check", "--config", path2, "--out", str(out2)]) == 0
    assert json.loads((out2 / "check.json").read_text())["achievable"] is False


def test_kstats(tmp_path):
    cfg = {**SIMULATE_CFG, "n": 8, "codebook_draws": 20}
    path = write_json(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["kstats", "--config", path, "--out", str(out)]) == 0
    lines = (out / "kstats.csv").read_text().splitlines()
    assert lines[0].startswith("n,codebook_draws,mean_k")
    vals = lines[1].split(",")
    assert int(vals[0]) == 8 and int(vals[1]) == 20
    assert float(vals[2]) >= 0.0


def test_typicality_bounds(tmp_path):
    cfg = {
        "p": {"axes": [2, 2], "probs": [0.4, 0.1, 0.1, 0.4]},
        "epsilon": 0.4,
        "n": 10,
    }
    path = write_json(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["typicality", "bounds", "--config", path, "--out", str(out)]) == 0
    report = json.loads((out / "bounds.json").read_text())
    assert "sequence" in report and "independent_draws" in report
    seq = report["sequence"]["sequence_prob"]
    assert seq["lower"] <= seq["upper"]


def test_csv_floats_round_trip_exactly(tmp_path):
    path = write_json(tmp_path / "cfg.json", SIMULATE_CFG)
    out = tmp_path / "run"
    assert main(["simulate", "--config", path, "--out", str(out)]) == 0
    from coordmd.montecarlo import run_experiment
    from coordmd.cli import _parse_experiment

    ecfg = _parse_experiment(SIMULATE_CFG, None)
    (_, stats, _), = run_experiment(ecfg)
    lines = (out / "simulate.csv").read_text().splitlines()[1:]
    by_scenario = {int(l.split(",")[1]): l.split(",") for l in lines}
    for s in (1, 2, 12):
        assert float(by_scenario[s][2]) == stats[s].mean_tv
        assert float(by_scenario[s][3]) == stats[s].std_err
