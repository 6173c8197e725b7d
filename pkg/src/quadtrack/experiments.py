"""Named targets and ready-made experiments shared by the CLI and the tests."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson

from . import linear
from .integrate import simulate_closed_loop
from .saturation import saturation_chain
from .signals import ClosedForm, SampledSignal, StageSignal, TimeGrid, l2_norm, ramp, ramp_deriv
from .synthesis import TargetCurve, synthesize_tracking_control
from .system import example_net_system

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# closed-form targets


def circle_target(radius=1.0, freq=1.0, height=1.0) -> TargetCurve:
    """``[r cos 2 pi w t, r sin 2 pi w t, c]``."""
    w = TWO_PI * freq

    def value(t):
        return np.stack([radius * np.cos(w * t), radius * np.sin(w * t), np.full_like(t, height)], axis=-1)

    def deriv(t):
        return np.stack([-radius * w * np.sin(w * t), radius * w * np.cos(w * t), np.zeros_like(t)], axis=-1)

    return TargetCurve(value, deriv, 3)


def plateau(t, amplitude=5.0):
    """Smooth profile, 0 at t = 0, equal to ``amplitude`` on [1/3, 2/3], back to 0 at t = 1."""
    return amplitude * ramp(3 * t) * ramp(3 - 3 * t)


def plateau_deriv(t, amplitude=5.0):
    return amplitude * 3 * (ramp_deriv(3 * t) * ramp(3 - 3 * t) - ramp(3 * t) * ramp_deriv(3 - 3 * t))


def bump_target(amplitude=5.0) -> TargetCurve:
    """``[psi_1, 0, 0]`` with ``psi_1`` the plateau profile."""

    def value(t):
        z = np.zeros_like(t)
        return np.stack([plateau(t, amplitude), z, z], axis=-1)

    def deriv(t):
        z = np.zeros_like(t)
        return np.stack([plateau_deriv(t, amplitude), z, z], axis=-1)

    return TargetCurve(value, deriv, 3)


def constant_target(value) -> TargetCurve:
    c = np.asarray(value, dtype=np.float64)
    return TargetCurve(lambda t: np.broadcast_to(c, (t.size, c.size)).copy(),
                       lambda t: np.zeros((t.size, c.size)), c.size)


def line_target(start, end, tau=1.0) -> TargetCurve:
    a, b = np.asarray(start, dtype=np.float64), np.asarray(end, dtype=np.float64)
    slope = (b - a) / tau
    return TargetCurve(lambda t: a + np.outer(t, slope), lambda t: np.broadcast_to(slope, (t.size, a.size)).copy(),
                       a.size)


TARGETS = {
    "circle": circle_target,
    "plateau_bump": bump_target,
    "constant": constant_target,
    "line": line_target,
}


def make_target(name: str, **params) -> TargetCurve:
    try:
        fn = TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown target {name!r}; known: {sorted(TARGETS)}") from None
    return fn(**params)


# ---------------------------------------------------------------------------
# the two-sided demonstration on the three-state network system


def strong_tracking_bound(psi1_nodes, grid: TimeGrid, delta=1.0) -> float:
    """Lower bound on the L2 norm of ``x_2`` for any trajectory from 0 with
    ``|x_1 - psi_1| <= delta`` and ``|x_3| <= delta``.

    Since ``x_2' = x_1^2 - x_3^2 >= max(psi_1 - delta, 0)^2 - delta^2``, ``x_2``
    dominates the running integral ``M`` of that rate, so ``|x_2| >= max(M, 0)``.
    """
    rate = np.maximum(np.asarray(psi1_nodes) - delta, 0.0) ** 2 - delta**2
    M = np.zeros_like(rate)
    M[1:] = np.cumsum(0.5 * grid.h * (rate[:-1] + rate[1:]))
    return l2_norm(SampledSignal(grid, np.maximum(M, 0.0)))


def exact_tracking_attempt(sys, amplitude, grid: TimeGrid):
    """Force ``x_1 = psi_1`` and ``x_3 = 0`` exactly; then ``x_2 = int psi_1^2``.

    Returns the simulated trajectory of ``u_1 = psi_1' + psi_1 x_2``, ``u_2 = 0``.
    """
    fine = grid.refine(2)
    t = fine.nodes
    x2 = np.concatenate([[0.0], cumulative_simpson(plateau(t, amplitude) ** 2, x=t)])
    st = grid.stage_times
    x2_st = x2[: 2 * grid.steps + 1][np.rint((st - grid.t0) / fine.h).astype(int)]
    u1 = plateau_deriv(st, amplitude) + plateau(st, amplitude) * x2_st
    u = StageSignal(grid, np.stack([u1, np.zeros_like(u1)], axis=-1))
    return simulate_closed_loop(sys, np.zeros(3), u, grid)


def example00_demo(eps=0.25, amplitude=5.0, delta=1.0, pieces=16, seed=0, **synth):
    """Weak tracking succeeds for the plateau target while strong tracking cannot.

    Returns ``(summary, report)``.
    """
    sys = example_net_system()
    chain = saturation_chain(sys, seed=seed)
    psi = bump_target(amplitude)
    rep = synthesize_tracking_control(sys, chain, psi, eps, tau=1.0, pieces=pieces, **synth)
    grid = rep.control.grid
    x = rep.trajectory.values
    psi1 = psi.nodes(grid)[:, 0]
    exact = exact_tracking_attempt(sys, amplitude, TimeGrid(1.0, 4096))
    exact_psi = psi.nodes(exact.grid)
    return {
        "weak": {
            "relaxation_error": rep.achieved["relaxation_error"],
            "endpoint_error": rep.achieved["endpoint_error"],
            "total": rep.total_error,
            "eps": eps,
            "success": rep.total_error < eps,
        },
        "synthesized_trajectory": {
            "l2_error_full_state": rep.achieved["l2_error"],
            "l2_x2": l2_norm(SampledSignal(grid, x[:, 1])),
            "l2_x3": l2_norm(SampledSignal(grid, x[:, 2])),
        },
        "strong_lower_bound": {"delta": delta, "l2_x2_lower_bound": strong_tracking_bound(psi1, grid, delta)},
        "exact_tracking_attempt": {
            "x1_x3_sup_error": float(np.max(np.abs(exact.values[:, [0, 2]] - exact_psi[:, [0, 2]]))),
            "l2_x2": l2_norm(SampledSignal(exact.grid, exact.values[:, 1])),
        },
        "synthesis": rep.to_dict(),
    }, rep


# ---------------------------------------------------------------------------
# linear dichotomy


def linear_demo(A, B, tau=1.0, steps=2000, seed=0) -> dict:
    """Kernel witnesses for a linear triple plus a duality check on random smooth signals."""
    lin = linear.LinearTriple(A, B)
    grid = TimeGrid(tau, steps)
    res = linear.onto_check(lin.B)
    out = {"onto": res.onto, "null_dim": int(res.null_basis.shape[0])}
    if res.onto:
        out["witness_max_residual"] = None
        out["weak_witness_max_residual"] = None
    else:
        eta = res.null_basis[0]
        g = linear.kernel_witness(lin, eta, grid)
        out["witness_max_residual"] = linear.max_norm(linear.apply_adjoint(lin, g, grid))
        out["weak_witness_max_residual"] = linear.max_norm(linear.extended_weak_adjoint(lin, g, grid))
        out["witness_identity_residual"] = linear.witness_identity_residual(lin, eta, grid)
    rng = np.random.default_rng(seed)
    u = random_trig_signal(rng, grid, lin.B.shape[1])
    gs = random_trig_signal(rng, grid, lin.C.shape[0])
    out["duality_residual"] = linear.duality_residual(lin, u, gs, grid)
    return out


def random_trig_signal(rng, grid: TimeGrid, dim: int, harmonics: int = 3) -> ClosedForm:
    """Smooth random signal: a sum of a few sines and cosines per component."""
    a = rng.normal(size=(harmonics, dim))
    b = rng.normal(size=(harmonics, dim))
    c = rng.normal(size=dim)
    k = np.arange(1, harmonics + 1)
    w = TWO_PI * k / grid.tau

    def value(t):
        t = np.asarray(t)[:, None]
        return c + np.sin(t * w) @ a + np.cos(t * w) @ b

    return ClosedForm(grid, value, dim=dim)
