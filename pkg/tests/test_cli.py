import json

import numpy as np
import pytest

from quadtrack import __version__
from quadtrack.cli import main, run
from quadtrack.reports import config_hash, read_csv, write_csv
from quadtrack.signals import TimeGrid


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def report(out):
    return json.loads((out / "report.json").read_text())


def test_saturate_lorenz(tmp_path):
    cfg = {"system": "builtin:lorenz", "seed": 0}
    out = tmp_path / "o"
    assert run("saturate", write_cfg(tmp_path, cfg), out) == 0
    rep = report(out)
    assert rep["result"]["n_X"] == 1 and rep["result"]["saturated"] is True
    assert rep["version"] == __version__ and rep["config_sha256"] == config_hash(cfg)


def test_linear_demo(tmp_path):
    out = tmp_path / "o"
    assert run("linear-demo", write_cfg(tmp_path, {"A": [[0, 1], [-1, 0]], "B": [[1], [0]], "seed": 0}), out) == 0
    res = report(out)["result"]
    assert res["onto"] is False and res["witness_max_residual"] <= 1e-8


def test_linear_demo_onto(tmp_path):
    out = tmp_path / "o"
    assert run("linear-demo", write_cfg(tmp_path, {"A": [[0.0]], "B": [[1.0]], "seed": 0}), out) == 0
    assert report(out)["result"]["witness_max_residual"] is None


def test_synthesize_writes_csvs(tmp_path):
    cfg = {"system": "builtin:lorenz", "target": {"id": "circle"}, "eps": 0.5, "seed": 0}
    out = tmp_path / "o"
    assert main(["synthesize", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(out)]) == 0
    grid, x = read_csv(out / "trajectory.csv")
    _, u = read_csv(out / "control.csv")
    assert x.shape == (grid.steps + 1, 3) and u.shape[1] == 2
    assert (out / "trajectory.csv").read_text().startswith("t,x_0,x_1,x_2\n")
    assert report(out)["result"]["synthesis"]["success"]


def test_synthesize_sampled_target(tmp_path):
    g = TimeGrid(1.0, 200)
    write_csv(tmp_path / "psi.csv", g, np.stack([np.cos(g.nodes), np.sin(g.nodes), np.ones(201)], -1))
    cfg = {"system": "builtin:lorenz", "target": {"samples": "psi.csv"}, "eps": 0.5, "seed": 0}
    assert run("synthesize", write_cfg(tmp_path, cfg), tmp_path / "o") == 0


def test_system_from_file(tmp_path):
    from quadtrack.system import lorenz_system

    (tmp_path / "sys.json").write_text(json.dumps(lorenz_system().to_dict()))
    cfg = {"system": "sys.json", "seed": 0}
    assert run("saturate", write_cfg(tmp_path, cfg), tmp_path / "o") == 0


def test_simulate(tmp_path):
    cfg = {"system": "builtin:lorenz", "x0": [1, 1, 1], "grid_steps": 500}
    out = tmp_path / "o"
    assert run("simulate", write_cfg(tmp_path, cfg), out) == 0
    assert len(report(out)["result"]["final_state"]) == 3


@pytest.mark.parametrize(
    "command,cfg",
    [
        ("saturate", {"system": "builtin:lorenz", "seed": 0, "typo": 1}),
        ("saturate", {"system": "builtin:lorenz"}),
        ("saturate", {"system": "builtin:nothing", "seed": 0}),
        ("synthesize", {"system": "builtin:lorenz", "target": {"id": "spiral"}, "eps": 0.5, "seed": 0}),
        ("simulate", {"system": "builtin:lorenz", "x0": [1, 1, 1], "control": {"kind": "wiggle"}}),
        ("coupled-demo", {"system": "builtin:example00", "n_z": 3, "Gamma_tilde": "componentwise",
                          "z_ref": {"id": "constant", "params": {"value": [1, -1, 1]}}, "eps": 0.5, "seed": 0,
                          "F": {"kind": "zero"}, "tau": 1, "z0": [1, 1, 1], "grid_steps": 100, "pieces": 4,
                          "window": 0.25, "extra": 0}),
    ],
)
def test_config_errors(tmp_path, command, cfg):
    assert run(command, write_cfg(tmp_path, cfg), tmp_path / "o") == 1


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    assert run("saturate", p, tmp_path / "o") == 1


def test_seed_flag_satisfies_requirement(tmp_path):
    p = write_cfg(tmp_path, {"system": "builtin:lorenz"})
    assert main(["saturate", "--config", str(p), "--out", str(tmp_path / "o"), "--seed", "4"]) == 0
    assert report(tmp_path / "o")["config"]["seed"] == 4


def test_budget_exhausted_exit(tmp_path):
    cfg = {"system": "builtin:lorenz", "target": {"id": "circle"}, "eps": 1e-4, "n_osc_max": 16, "seed": 0}
    out = tmp_path / "o"
    assert run("synthesize", write_cfg(tmp_path, cfg), out) == 2
    rep = report(out)
    assert rep["status"] == "budget_exhausted" and (out / "control.csv").exists()


def test_blow_up_exit(tmp_path):
    cfg = {"system": {"n_x": 1, "n_u": 1, "A": [[0]], "B": [[1]], "Gamma": [[[-1]]]}, "x0": [10], "tau": 1}
    out = tmp_path / "o"
    assert run("simulate", write_cfg(tmp_path, cfg), out) == 3
    assert report(out)["status"] == "blow_up"


def test_orthant_violation_is_config_error(tmp_path):
    cfg = {"system": "builtin:example00", "n_z": 3, "Gamma_tilde": "componentwise", "F": {"kind": "zero"},
           "z_ref": {"id": "exp_decay", "params": {"scale": [1, -1, 0]}}, "eps": 0.5, "seed": 0}
    assert run("coupled-demo", write_cfg(tmp_path, cfg), tmp_path / "o") == 1


def test_coupled_demo_plan(tmp_path):
    cfg = {"system": "builtin:example00", "n_z": 3, "Gamma_tilde": "componentwise", "F": {"kind": "zero"},
           "z_ref": {"id": "exp_decay", "params": {"scale": [1, 2, 0.5]}}, "eps": 0.5, "seed": 0}
    out = tmp_path / "o"
    assert run("coupled-demo", write_cfg(tmp_path, cfg), out) == 0
    res = report(out)["result"]
    assert res["success"] and res["reference_residual"] < 1e-6
    assert (out / "z.csv").exists() and (out / "x.csv").exists()


def test_coupled_demo_drive_mode(tmp_path):
    cfg = {"system": "builtin:lorenz", "n_z": 1, "Gamma_tilde": [[[1, 0, 0]]], "F": {"kind": "zero"},
           "x_target": {"id": "circle"}, "z0": [1.0], "eps": 0.5, "seed": 0}
    out = tmp_path / "o"
    assert run("coupled-demo", write_cfg(tmp_path, cfg), out) == 0
    assert report(out)["result"]["errors"]["total"] < 0.5


def test_example00_demo(tmp_path):
    out = tmp_path / "o"
    assert run("example00-demo", write_cfg(tmp_path, {"seed": 0}), out) == 0
    res = report(out)["result"]
    assert res["weak"]["total"] < 0.25
    assert res["strong_lower_bound"]["l2_x2_lower_bound"] > 0.5


def test_grid_steps_override(tmp_path):
    cfg = {"system": "builtin:lorenz", "x0": [1, 1, 1]}
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(out), "--grid-steps", "64"]) == 0
    assert report(out)["result"]["steps"] == 64


def test_reports_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, {"system": "builtin:r6", "seed": 11})
    run("saturate", cfg, tmp_path / "a")
    run("saturate", cfg, tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_csv_round_trip(tmp_path):
    g = TimeGrid(2.0, 10, 1.0)
    vals = np.random.default_rng(0).normal(size=(11, 2))
    write_csv(tmp_path / "a.csv", g, vals)
    g2, v2 = read_csv(tmp_path / "a.csv")
    assert g2 == g and np.array_equal(v2, vals)
