"""Command-line experiment runner.

Exit status: 0 success, 1 configuration error, 2 error budget not met,
3 blow-up during simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import coupled as cp
from . import experiments
from .exceptions import BlowUp, BudgetExhausted, ConfigError, OrthantViolation
from .integrate import resolve_driven, simulate_closed_loop
from .reports import config_hash, read_csv, read_trajectory, write_csv, write_json, write_signal_csv
from .saturation import check_assumption1, saturation_chain
from .signals import ClosedForm, PiecewiseConstant, SampledSignal, TimeGrid, Trajectory
from .synthesis import TargetCurve, synthesize_tracking_control
from .system import example_net_system, lorenz_system, six_state_system, system_from_dict

BUILTIN_SYSTEMS = {"lorenz": lorenz_system, "example00": example_net_system, "r6": six_state_system}

GLOBAL_KEYS = {"seed", "grid_steps", "output_dir"}
SYNTH_KEYS = {"tau", "eps", "pieces", "n_osc_start", "n_osc_max", "taper_width", "steps_per_phase",
              "window", "refit", "reanchor", "saturation"}
SATURATION_KEYS = {"max_depth", "p_max", "attempts"}
COMMAND_KEYS = {
    "saturate": {"system", "check_directions"} | SATURATION_KEYS,
    "synthesize": {"system", "target"} | SYNTH_KEYS,
    "simulate": {"system", "x0", "tau", "control"},
    "linear-demo": {"A", "B", "tau"},
    "coupled-demo": {"system", "n_z", "Gamma_tilde", "F", "z_ref", "x_target", "z0"} | SYNTH_KEYS,
    "example00-demo": {"eps", "amplitude", "delta", "pieces", "n_osc_start", "n_osc_max"},
}
NEEDS_SEED = {"saturate", "synthesize", "linear-demo", "coupled-demo", "example00-demo"}


class Run:
    """Validated configuration of one command."""

    def __init__(self, command, cfg, base_dir):
        allowed = COMMAND_KEYS[command] | GLOBAL_KEYS
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown fields for {command}: {sorted(unknown)}")
        if command in NEEDS_SEED and "seed" not in cfg:
            raise ConfigError(f"{command} needs a seed (config field or --seed)")
        self.command = command
        self.cfg = cfg
        self.base = base_dir

    def get(self, key, default=None, kind=None):
        v = self.cfg.get(key, default)
        if v is None or kind is None:
            return v
        try:
            if kind is bool:
                if not isinstance(v, bool):
                    raise TypeError
                return v
            return kind(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {key!r} must be {kind.__name__}") from exc

    def need(self, key, kind=None):
        if key not in self.cfg:
            raise ConfigError(f"missing field {key!r}")
        return self.get(key, kind=kind)

    def path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    # --- shared pieces ------------------------------------------------------

    def system(self):
        spec = self.need("system")
        if isinstance(spec, str) and spec.startswith("builtin:"):
            name = spec.split(":", 1)[1]
            if name not in BUILTIN_SYSTEMS:
                raise ConfigError(f"unknown builtin system {name!r}")
            return BUILTIN_SYSTEMS[name]()
        if isinstance(spec, str):
            try:
                spec = json.loads(self.path(spec).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot load system file: {exc}") from exc
        if not isinstance(spec, dict):
            raise ConfigError("system must be an object, a file path or builtin:<name>")
        return system_from_dict(spec)

    def chain(self, sys):
        sat = dict(self.cfg.get("saturation", {}))
        unknown = set(sat) - SATURATION_KEYS
        if unknown:
            raise ConfigError(f"unknown saturation fields: {sorted(unknown)}")
        for k in SATURATION_KEYS & set(self.cfg):
            sat[k] = self.cfg[k]
        return saturation_chain(sys, seed=self.get("seed", kind=int), **{k: int(v) for k, v in sat.items()})

    def target(self, key, tau):
        spec = self.need(key)
        if not isinstance(spec, dict):
            raise ConfigError(f"{key} must be an object")
        if "samples" in spec:
            grid, values = read_csv(self.path(spec["samples"]))
            if abs(grid.tau - tau) > 1e-12 or grid.t0 != 0:
                raise ConfigError(f"{key} samples must cover [0, tau]")
            return TargetCurve.from_samples(grid, values)
        if "id" not in spec or set(spec) - {"id", "params"}:
            raise ConfigError(f"{key} needs either 'samples' or 'id' (+ optional 'params')")
        try:
            return experiments.make_target(spec["id"], **spec.get("params", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def synth_params(self):
        out = {}
        for key, kind in (("pieces", int), ("n_osc_start", int), ("n_osc_max", int), ("taper_width", float),
                          ("steps_per_phase", int), ("window", float), ("refit", int), ("grid_steps", int),
                          ("reanchor", bool)):
            if key in self.cfg:
                out[key] = self.get(key, kind=kind)
        return out


# ---------------------------------------------------------------------------
# commands


def cmd_saturate(run: Run, out: Path):
    sys = run.system()
    chain = run.chain(sys)
    directions = run.get("check_directions")
    check = check_assumption1(sys, directions, seed=run.get("seed", kind=int))
    return {"chain": chain.to_dict(), "saturated": chain.saturated, "n_X": chain.n_X,
            "assumption1": check.to_dict()}


def _write_synthesis(out, rep, psi):
    write_signal_csv(out / "control.csv", rep.control, "u")
    write_csv(out / "trajectory.csv", rep.trajectory.grid, rep.trajectory.values)
    write_csv(out / "target.csv", rep.trajectory.grid, psi.nodes(rep.trajectory.grid))


def cmd_synthesize(run: Run, out: Path):
    sys = run.system()
    tau = run.get("tau", 1.0, float)
    psi = run.target("target", tau)
    chain = run.chain(sys)
    try:
        rep = synthesize_tracking_control(sys, chain, psi, run.need("eps", float), tau=tau, **run.synth_params())
    except BudgetExhausted as exc:
        _write_synthesis(out, exc.report, psi)
        exc.payload = {"synthesis": exc.report.to_dict(), "n_X": chain.n_X}
        raise
    _write_synthesis(out, rep, psi)
    return {"synthesis": rep.to_dict(), "n_X": chain.n_X}


def cmd_simulate(run: Run, out: Path):
    sys = run.system()
    x0 = np.asarray(run.need("x0"), dtype=np.float64)
    spec = run.get("control", {"kind": "zero"})
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind == "samples":
        grid, values = read_csv(run.path(spec["file"]))
        u = SampledSignal(grid, values)
    elif kind in ("zero", "constant"):
        grid = TimeGrid(run.get("tau", 1.0, float), run.get("grid_steps", 1000, int))
        value = np.zeros(sys.n_u) if kind == "zero" else np.asarray(spec["value"], dtype=np.float64)
        u = PiecewiseConstant(grid, value[None])
    else:
        raise ConfigError("control.kind must be zero, constant or samples")
    if u.dim != sys.n_u:
        raise ConfigError(f"control has dimension {u.dim}, system expects {sys.n_u}")
    x = simulate_closed_loop(sys, x0, u, grid)
    write_csv(out / "trajectory.csv", grid, x.values)
    return {"final_state": x.final.tolist(), "steps": grid.steps, "tau": grid.tau}


def cmd_linear_demo(run: Run, out: Path):
    try:
        return experiments.linear_demo(run.need("A"), run.need("B"), run.get("tau", 1.0, float),
                                       run.get("grid_steps", 2000, int), run.get("seed", kind=int))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _z_constant(t, value):
    return np.tile(np.asarray(value, dtype=np.float64), (t.size, 1))


def _z_exp_decay(t, scale, rate=1.0):
    return np.exp(-rate * t)[:, None] * np.asarray(scale, dtype=np.float64)[None, :]


Z_REFS = {"constant": _z_constant, "exp_decay": _z_exp_decay}


def _z_reference(run, coupled, tau):
    steps = run.get("grid_steps", 400, int)
    grid = TimeGrid(tau, steps)
    if "x_target" in run.cfg:
        # drive mode: z_bar solves the driven equation along the x target
        xt = run.target("x_target", tau)
        z0 = np.asarray(run.need("z0"), dtype=np.float64)
        drive = ClosedForm(grid, xt.value, dim=xt.dim)
        z = resolve_driven(coupled, z0, drive, grid)
        return cp.ReferencePair(z, Trajectory(grid, xt.nodes(grid)), xt)
    spec = run.need("z_ref")
    if isinstance(spec, dict) and "samples" in spec:
        z_ref = read_trajectory(run.path(spec["samples"]))
    elif isinstance(spec, dict) and spec.get("id") in Z_REFS:
        try:
            z_ref = Trajectory(grid, Z_REFS[spec["id"]](grid.nodes, **spec.get("params", {})))
        except TypeError as exc:
            raise ConfigError(f"bad z_ref params: {exc}") from exc
    else:
        raise ConfigError(f"z_ref must be {{'samples': file}} or {{'id': one of {sorted(Z_REFS)}, 'params': ...}}")
    return cp.plan_reference(coupled, z_ref, run.need("eps", float))


def cmd_coupled_demo(run: Run, out: Path):
    sys = run.system()
    Fspec = dict(run.get("F", {"kind": "zero"}))
    n_z = run.need("n_z", int)
    try:
        F = cp.make_F(Fspec.pop("kind"), n_z, **Fspec)
    except KeyError as exc:
        raise ConfigError(f"F is missing {exc}") from exc
    Gt = run.need("Gamma_tilde")
    if Gt == "componentwise":
        Gt = cp.componentwise_product(n_z)
    coupled = cp.make_coupled(sys, Gt, F)
    tau = run.get("tau", 1.0, float)
    ref = _z_reference(run, coupled, tau)
    chain = run.chain(sys)
    params = run.synth_params()
    params.pop("grid_steps", None)
    res = cp.track_coupled(coupled, chain, ref, run.need("eps", float), **params)
    write_csv(out / "x.csv", res["x"].grid, res["x"].values)
    write_csv(out / "z.csv", res["z"].grid, res["z"].values, "z")
    write_signal_csv(out / "control.csv", res["control"], "u")
    return {"errors": res["errors"], "eps_x": res["eps_x"], "halvings": res["halvings"],
            "success": res["success"], "reference_residual": cp.reference_residual(coupled, ref),
            "coupled": coupled.to_dict()}


def cmd_example00_demo(run: Run, out: Path):
    kw = {k: run.get(k, kind=float) for k in ("eps", "amplitude", "delta") if k in run.cfg}
    kw.update({k: run.get(k, kind=int) for k in ("pieces", "n_osc_start", "n_osc_max", "grid_steps") if k in run.cfg})
    summary, rep = experiments.example00_demo(seed=run.get("seed", kind=int), **kw)
    write_csv(out / "trajectory.csv", rep.trajectory.grid, rep.trajectory.values)
    write_signal_csv(out / "control.csv", rep.control, "u")
    return summary


COMMANDS = {
    "saturate": cmd_saturate,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "linear-demo": cmd_linear_demo,
    "coupled-demo": cmd_coupled_demo,
    "example00-demo": cmd_example00_demo,
}


def build_parser():
    p = argparse.ArgumentParser(prog="quadtrack", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--grid-steps", type=int, help="overrides grid_steps")
    return p


def run(command, config_path, out=None, seed=None, grid_steps=None) -> int:
    """Execute one command; returns the exit status."""
    config_path = Path(config_path)
    try:
        cfg = json.loads(config_path.read_text())
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if seed is not None:
            cfg["seed"] = seed
        if grid_steps is not None:
            cfg["grid_steps"] = grid_steps
        out_dir = Path(out or cfg.get("output_dir") or ".")
        r = Run(command, cfg, config_path.parent)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    report = {"command": command, "version": __version__, "config_sha256": config_hash(cfg), "config": cfg}
    status = 0
    try:
        report["result"] = COMMANDS[command](r, out_dir)
        report["status"] = "ok"
    except (ConfigError, OrthantViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BudgetExhausted as exc:
        report["status"] = "budget_exhausted"
        report["result"] = getattr(exc, "payload", {"synthesis": exc.report.to_dict()})
        status = 2
    except BlowUp as exc:
        report["status"] = "blow_up"
        report["result"] = {"t_blow": exc.t_blow, "threshold": exc.threshold}
        status = 3
    write_json(out_dir / "report.json", report)
    return status


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    return run(a.command, a.config, a.out, a.seed, a.grid_steps)


if __name__ == "__main__":
    sys.exit(main())
