from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from annealed_langevin.cli import build_task, main, resolve_config

BASE = {
    "task": {"kind": "gaussian", "dim": 2, "n": 3},
    "sampling": {"chains": 200, "seed": 0},
}


def _write_cfg(path: Path, cfg: dict) -> str:
    path.write_text(json.dumps(cfg))
    return str(path)


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_resolve_config_materializes_defaults():
    cfg = resolve_config({})
    assert cfg["tuning"]["gamma"] == 0.5
    assert cfg["tuning"]["omega"] == 0.5  # d = 2
    assert cfg["task"]["prior"]["means"] == [[0.0, 0.0], [1.0, 1.0]]
    assert cfg["sampling"]["chains"] == 3000
    wide = resolve_config({"task": {"dim": 10}})
    assert wide["tuning"]["omega"] == 0.8
    assert len(wide["task"]["prior"]["means"][0]) == 10


def test_resolve_config_overrides():
    cfg = resolve_config({}, seed=7, method="linhart", out="elsewhere")
    assert cfg["sampling"]["seed"] == 7
    assert cfg["method"] == "linhart"
    assert cfg["output"]["directory"] == "elsewhere"
    explicit = resolve_config({"tuning": {"omega": 0.6}, "task": {"dim": 10}})
    assert explicit["tuning"]["omega"] == 0.6  # explicit value wins over the d>=10 default


def test_resolve_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ValueError, match="tuning.gama"):
        resolve_config({"tuning": {"gama": 1.0}})
    with pytest.raises(ValueError, match="schema_version"):
        resolve_config({"schema_version": 99})
    with pytest.raises(ValueError, match="kind"):
        resolve_config({"task": {"kind": "weird"}})
    with pytest.raises(ValueError, match="method"):
        resolve_config({"method": "magic"})


def test_build_task_reproducible_per_cell():
    cfg = resolve_config({})
    a = build_task(cfg, 4, 0)
    b = build_task(cfg, 4, 0)
    c = build_task(cfg, 4, 1)
    assert np.array_equal(a.observations, b.observations)
    assert np.array_equal(a.likelihood_cov, b.likelihood_cov)
    assert not np.array_equal(a.likelihood_cov, c.likelihood_cov)
    eigs = np.linalg.eigvalsh(a.likelihood_cov)
    assert eigs.min() > 0.02 * 0.99 and eigs.max() < 0.1 * 1.01


def test_main_rejects_bad_config(tmp_path, capsys):
    path = _write_cfg(tmp_path / "bad.json", {"tuning": {"gama": 1.0}})
    assert main(["tune", "--config", path, "--out", str(tmp_path / "out")]) == 2
    assert "error:" in capsys.readouterr().err
    missing = str(tmp_path / "nope.json")
    assert main(["tune", "--config", missing, "--out", str(tmp_path / "out")]) == 2


def test_tune_writes_plans_and_report(tmp_path):
    path = _write_cfg(tmp_path / "cfg.json", BASE)
    out = tmp_path / "run"
    assert main(["tune", "--config", path, "--out", str(out)]) == 0
    plans = {}
    for method in ("geffner", "linhart"):
        rows = _read_csv(out / f"plan_{method}.csv")
        assert len(rows) == 10
        assert list(rows[0].keys()) == ["t", "h", "k", "m", "M", "w2_next", "B"]
        plans[method] = rows
    # step sizes: unweighted method never larger, level by level
    for row_g, row_l in zip(plans["geffner"], plans["linhart"]):
        assert float(row_g["h"]) <= float(row_l["h"])
        assert row_g["t"] == row_l["t"]
    report = json.loads((out / "tune.json").read_text())
    assert report["schema_version"] == 1
    assert report["config"]["tuning"]["omega"] == 0.5  # resolved config embedded
    for method in ("geffner", "linhart"):
        block = report["results"][method]
        assert block["feasible"] is True
        assert block["proxy"] is False
        assert block["total_steps"] == sum(int(r["k"]) for r in plans[method])
        assert block["csv"] == f"plan_{method}.csv"
        assert report["timings"][method] >= 0


def test_tune_single_method(tmp_path):
    path = _write_cfg(tmp_path / "cfg.json", BASE)
    out = tmp_path / "run"
    assert main(["tune", "--config", path, "--out", str(out), "--method", "geffner"]) == 0
    assert (out / "plan_geffner.csv").exists()
    assert not (out / "plan_linhart.csv").exists()
    report = json.loads((out / "tune.json").read_text())
    assert list(report["results"].keys()) == ["geffner"]


def test_tune_infeasible_exit_code(tmp_path):
    cfg = dict(BASE, tuning={"eps_dsm_post": 5.0})
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["tune", "--config", path, "--out", str(out)]) == 1
    report = json.loads((out / "tune.json").read_text())
    for method in ("geffner", "linhart"):
        assert report["results"][method]["feasible"] is False
        assert "level" in report["results"][method]["error"]
    assert not (out / "plan_geffner.csv").exists()


def test_tune_mixture_prior_marks_proxy(tmp_path):
    cfg = {
        "task": {"kind": "gmm_prior", "dim": 2, "n": 3},
        "sampling": {"chains": 200, "seed": 0},
    }
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["tune", "--config", path, "--out", str(out)]) == 0
    report = json.loads((out / "tune.json").read_text())
    assert report["results"]["geffner"]["proxy"] is True


def test_sample_outputs_and_determinism(tmp_path):
    cfg = dict(BASE, output={"formats": ["npy", "csv"]})
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_c = tmp_path / "c"
    assert main(["sample", "--config", path, "--out", str(out_a)]) == 0
    assert main(["sample", "--config", path, "--out", str(out_b)]) == 0
    assert main(["sample", "--config", path, "--out", str(out_c), "--seed", "9"]) == 0
    for method in ("geffner", "linhart"):
        pts_a = np.load(out_a / f"samples_{method}.npy")
        assert pts_a.shape == (200, 2)
        assert np.array_equal(pts_a, np.load(out_b / f"samples_{method}.npy"))
        assert not np.array_equal(pts_a, np.load(out_c / f"samples_{method}.npy"))
        assert (out_a / f"samples_{method}.csv").exists()
    report = json.loads((out_a / "sample.json").read_text())
    methods = report["results"]["methods"]
    for method in ("geffner", "linhart"):
        block = methods[method]
        assert block["status"] == "ok"
        assert block["final_w2"] >= 0.0
        assert block["total_steps"] >= 10
        assert set(block["samples_files"]) == {f"samples_{method}.npy", f"samples_{method}.csv"}
        assert set(report["timings"][method]) == {"tune_s", "sample_s", "evaluate_s"}
    assert report["results"]["seed"] == 0 and report["results"]["n"] == 3


def test_sample_rejects_n_list(tmp_path, capsys):
    cfg = {"task": {"kind": "gaussian", "dim": 2, "n": [2, 3]}}
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    assert main(["sample", "--config", path, "--out", str(tmp_path / "out")]) == 2
    assert "sweep" in capsys.readouterr().err


def test_sweep_grid_and_worker_independence(tmp_path):
    cfg = {
        "task": {"kind": "gaussian", "dim": 2, "n": [2, 3]},
        "sampling": {"chains": 150, "seed": 0, "seeds": [0, 1]},
    }
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out_1 = tmp_path / "w1"
    out_2 = tmp_path / "w2"
    assert main(["sweep", "--config", path, "--out", str(out_1)]) == 0
    assert main(["sweep", "--config", path, "--out", str(out_2), "--workers", "2"]) == 0
    cells = _read_csv(out_1 / "sweep_cells.csv")
    assert len(cells) == 8  # 2 n-values x 2 seeds x 2 methods
    assert all(row["status"] == "ok" for row in cells)
    assert {row["method"] for row in cells} == {"geffner", "linhart"}
    # thread count must not change any result
    assert (out_1 / "sweep_cells.csv").read_text() == (out_2 / "sweep_cells.csv").read_text()
    summary = _read_csv(out_1 / "sweep_summary.csv")
    assert len(summary) == 4
    for row in summary:
        assert row["failures"] == "0"
        assert float(row["final_w2_std"]) >= 0.0
    report = json.loads((out_1 / "sweep.json").read_text())
    assert len(report["results"]["cells"]) == 8
    assert report["timings"]["total_s"] > 0


def test_sweep_single_seed_zero_std(tmp_path):
    cfg = {
        "task": {"kind": "gaussian", "dim": 2, "n": [2]},
        "sampling": {"chains": 150, "seed": 5},
    }
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["sweep", "--config", path, "--out", str(out)]) == 0
    for row in _read_csv(out / "sweep_summary.csv"):
        assert row["cells"] == "1"
        assert float(row["total_steps_std"]) == 0.0
        assert float(row["final_w2_std"]) == 0.0


def test_sweep_propagates_failures(tmp_path):
    cfg = {
        "task": {"kind": "gaussian", "dim": 2, "n": [2]},
        "tuning": {"eps_dsm_post": 5.0},
        "sampling": {"chains": 150, "seed": 0},
    }
    path = _write_cfg(tmp_path / "cfg.json", cfg)
    out = tmp_path / "run"
    assert main(["sweep", "--config", path, "--out", str(out)]) == 1
    cells = _read_csv(out / "sweep_cells.csv")
    assert all(row["status"] == "error" for row in cells)
    assert all(row["error"].startswith("tuning:") for row in cells)
    summary = _read_csv(out / "sweep_summary.csv")
    assert all(row["failures"] == row["cells"] for row in summary)
