"""Control synthesis for weak tracking of a target curve.

The pipeline lifts the target ``psi`` to an additive input
``gamma = psi' + A psi + f(psi)``, fits it by constants, and then walks down the
saturation chain. At each level the piece values are rewritten as
``xi_0 - sum f(xi_i)`` with ``xi`` one level lower, the ``xi_i`` are realised by
a fast zero-mean oscillation ``zeta`` (multiplicative input), and ``zeta`` is
absorbed into the additive input through ``gamma + zeta'``. After the last
level the additive input lies in ``Range(B)`` and is solved for ``u``.

Two drivers are provided. ``reanchor=True`` (the default) processes the pieces
one after another, starting each from the state actually reached, which keeps
unstable drifts such as Lorenz under control. ``reanchor=False`` builds the
whole control open loop with a per-level error budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BudgetExhausted
from .integrate import resolve, simulate_closed_loop
from .saturation import SaturationChain
from .signals import (
    PhaseWave,
    PiecewiseConstant,
    SampledSignal,
    Signal,
    SmoothPhaseWave,
    StageSignal,
    Tapered,
    TimeGrid,
    Trajectory,
    l2_norm,
    phase_levels,
    relaxation_norm,
    sup_norm,
)
from .system import QuadraticSystem, eval_f

GAUSS_NODES = 8


# ---------------------------------------------------------------------------
# targets


class TargetCurve:
    """A curve ``psi`` with derivative, both vectorized over times."""

    def __init__(self, value, deriv, dim=None):
        self._value = value
        self._deriv = deriv
        self.dim = dim if dim is not None else np.atleast_2d(value(np.zeros(1))).shape[-1]

    @classmethod
    def from_samples(cls, grid: TimeGrid, values):
        """Linear interpolation of samples; derivative by central differences."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.steps + 1 or not np.all(np.isfinite(values)):
            raise ValueError("target samples must be finite and match the grid")
        d = np.gradient(values, grid.h, axis=0)
        t = grid.nodes

        def interp(arr):
            return lambda s: np.stack([np.interp(s, t, arr[:, i]) for i in range(arr.shape[1])], axis=-1)

        return cls(interp(values), interp(d), values.shape[1])

    def value(self, t):
        return np.asarray(self._value(np.atleast_1d(np.asarray(t, dtype=np.float64))), dtype=np.float64)

    def deriv(self, t):
        return np.asarray(self._deriv(np.atleast_1d(np.asarray(t, dtype=np.float64))), dtype=np.float64)

    @property
    def initial(self):
        return self.value(np.zeros(1))[0]

    def nodes(self, grid):
        return self.value(grid.nodes)


def _eval_stages(fn, grid):
    t = grid.stage_times.ravel()
    out = fn(t)
    return out.reshape(grid.steps, 3, -1)


def target_to_gamma(sys: QuadraticSystem, psi: TargetCurve, grid: TimeGrid) -> StageSignal:
    """``gamma = psi' + A psi + f(psi)`` at the RK stage times."""
    P = _eval_stages(psi.value, grid)
    D = _eval_stages(psi.deriv, grid)
    G = D + P @ sys.A.T + eval_f(sys, P)
    if not np.all(np.isfinite(G)):
        raise ValueError("target derivative is not finite")
    return StageSignal(grid, G)


def piecewise_constant_fit(gamma: Signal, pieces: int) -> PiecewiseConstant:
    """Average of ``gamma`` over each of ``pieces`` equal intervals."""
    grid = gamma.grid
    if pieces < 1 or grid.steps % pieces:
        raise ValueError(f"{grid.steps} steps not divisible into {pieces} pieces")
    inc = gamma.step_integrals().reshape(pieces, grid.steps // pieces, gamma.dim).sum(axis=1)
    return PiecewiseConstant(grid, inc / (grid.tau / pieces))


def anchored_piece_value(sys, psi: TargetCurve, a, t0, t1):
    """Constant additive input steering from state ``a`` at ``t0`` toward ``psi(t1)``.

    Averages ``phi' + A phi + f(phi)`` over the piece for the blend
    ``phi = psi + (a - psi(t0)) (1 - s)``; the ``phi'`` part is exact.
    """
    x, w = np.polynomial.legendre.leggauss(GAUSS_NODES)
    s = 0.5 * (x + 1.0)
    t = t0 + (t1 - t0) * s
    phi = psi.value(t) + np.outer(1.0 - s, np.asarray(a) - psi.value([t0])[0])
    rest = 0.5 * w @ (phi @ sys.A.T + eval_f(sys, phi))
    return (psi.value([t1])[0] - a) / (t1 - t0) + rest


# ---------------------------------------------------------------------------
# one level of the chain


def level_phases(chain: SaturationChain, level: int) -> int:
    """Number of phases ``m = 2p`` used at ``level`` (constant across pieces)."""
    p = sum(max(a.p, b.p) for a, b in chain.certificates[level].values())
    return 2 * p


def combine_certificates(basis, certs, value):
    """Certificate for an arbitrary ``value`` in the span of ``basis``.

    Expands ``value`` in the basis and uses homogeneity ``f(c xi) = c^2 f(xi)``:
    the sign of each coefficient picks the plus or minus certificate, ``xi_0``
    parts add linearly and the ``xi_i`` lists are concatenated, each padded to
    the larger of its two certificates so that ``p`` does not depend on ``value``.
    Returns ``(xi0, xis)``.
    """
    value = np.asarray(value, dtype=np.float64)
    coef = basis.vectors @ value
    if np.linalg.norm(value - coef @ basis.vectors) > 1e-8 * (1.0 + np.linalg.norm(value)):
        raise ValueError("piece value lies outside the certified subspace")
    n = value.size
    xi0 = np.zeros(n)
    xis = []
    for j in range(basis.dim):
        plus, minus = certs[j]
        width = max(plus.p, minus.p)
        c = coef[j]
        cert = plus if c >= 0 else minus
        xi0 += abs(c) * cert.xi0
        block = np.zeros((width, n))
        block[: cert.p] = np.sqrt(abs(c)) * cert.xis
        xis.append(block)
    return xi0, np.concatenate(xis, axis=0) if xis else np.zeros((0, n))


def level_reduce(sys, gamma_pc: PiecewiseConstant, basis, certs, n_osc: int, grid: TimeGrid | None = None):
    """Replace a piecewise-constant input by an oscillation one level down.

    Returns ``(zeta, gamma_lower)``: ``zeta`` is the per-piece ``m``-phase square
    wave with ``n_osc`` cycles per piece, ``gamma_lower`` the per-piece ``xi_0``.
    """
    grid = gamma_pc.grid if grid is None else grid
    parts = [combine_certificates(basis, certs, v) for v in gamma_pc.values]
    xi0 = np.array([c[0] for c in parts])
    p = parts[0][1].shape[0]
    lower = PiecewiseConstant(grid, xi0)
    if p == 0:
        return PhaseWave(grid, np.zeros((gamma_pc.pieces, 1, sys.n_x)), 1), lower
    levels = np.array([phase_levels(c[1]) for c in parts])
    return PhaseWave(grid, levels, n_osc), lower


def smooth_multiplicative(zeta: Signal, taper_width=None, window=0.25) -> Signal:
    """C-infinity stand-in for ``zeta`` that vanishes at both ends of the grid."""
    if isinstance(zeta, PhaseWave):
        zeta = zeta.smoothed(window)
    if taper_width is not None:
        zeta = Tapered(zeta, taper_width)
    return zeta


def absorb_multiplicative(zeta: Signal, gamma: Signal, taper_width=None, window=0.25):
    """Turn a multiplicative input into an additive one.

    Returns ``(gamma_tilde, zeta_tilde)`` with ``gamma_tilde = gamma + zeta_tilde'``,
    so that ``resolve(w0, zeta_tilde, gamma) == resolve(w0, 0, gamma_tilde) - zeta_tilde``.
    """
    zt = smooth_multiplicative(zeta, taper_width, window)
    return StageSignal(gamma.grid, gamma.stages() + zt.derivative_stages()), zt


# ---------------------------------------------------------------------------
# reports


@dataclass(eq=False)
class SynthesisReport:
    control: StageSignal
    trajectory: Trajectory
    achieved: dict
    per_level: list
    params: dict
    success: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def total_error(self):
        return self.achieved["relaxation_error"] + self.achieved["endpoint_error"]

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "achieved": self.achieved,
            "per_level": self.per_level,
            "params": self.params,
            "grid": {"tau": self.control.grid.tau, "steps": self.control.grid.steps},
            **self.extra,
        }


def tracking_errors(x: Trajectory, psi_nodes) -> dict:
    diff = SampledSignal(x.grid, x.values - psi_nodes)
    return {
        "relaxation_error": relaxation_norm(diff),
        "sup_error": sup_norm(diff),
        "l2_error": l2_norm(diff),
        "endpoint_error": float(np.linalg.norm(diff.values[-1])),
    }


def _control_from_additive(sys, gamma_tilde: Signal):
    G = gamma_tilde.stages()
    U = G @ np.linalg.pinv(sys.B).T
    resid = np.max(np.linalg.norm(U @ sys.B.T - G, axis=2)) / (1.0 + np.max(np.linalg.norm(G, axis=2)))
    return StageSignal(gamma_tilde.grid, U), float(resid)


def _finish(sys, psi, control, per_level, params, range_residual, extra=None):
    x = simulate_closed_loop(sys, psi.initial, control, control.grid)
    achieved = tracking_errors(x, psi.nodes(control.grid))
    achieved["range_residual"] = range_residual
    return SynthesisReport(control, x, achieved, per_level, params, True, extra or {})


# ---------------------------------------------------------------------------
# drivers


def _piece_steps(chain, n_list, refit, steps_per_phase):
    steps = steps_per_phase * refit ** max(chain.n_X - 1, 0)
    for l in range(1, chain.n_X + 1):
        steps *= n_list[l - 1] * level_phases(chain, l)
    return steps


def _reduce_all(sys, chain, gamma_pc, n_list, refit, taper_width, window):
    """Run every level on ``gamma_pc``; returns the E_0-valued input and level data."""
    info = []
    g = gamma_pc
    for l in range(chain.n_X, 0, -1):
        n = n_list[l - 1]
        zeta, low = level_reduce(sys, g, chain.levels[l], chain.certificates[l], n)
        gt, zt = absorb_multiplicative(zeta, low, taper_width, window)
        info.append({"level": l, "n_osc": n, "zeta_relaxation": relaxation_norm(zt), "gamma_in": g})
        if l > 1:
            g = piecewise_constant_fit(gt, g.pieces * n * level_phases(chain, l) * refit)
        else:
            g = gt
    return g, info


def _check_chain(chain):
    if not chain.saturated:
        raise ValueError("synthesis needs a saturated chain")


def _onto_control(sys, psi, tau, grid_steps, params):
    grid = TimeGrid(tau, grid_steps)
    control, rr = _control_from_additive(sys, target_to_gamma(sys, psi, grid))
    return _finish(sys, psi, control, [], params, rr)


def synthesize_tracking_control(
    sys: QuadraticSystem,
    chain: SaturationChain,
    psi: TargetCurve,
    eps: float,
    tau: float = 1.0,
    pieces: int = 16,
    n_osc_start: int = 8,
    n_osc_max: int = 1024,
    taper_width=None,
    window: float = 0.25,
    steps_per_phase: int = 32,
    refit: int = 4,
    grid_steps: int = 4000,
    reanchor: bool = True,
) -> SynthesisReport:
    """Smooth control whose closed loop tracks ``psi`` in the relaxation norm.

    Success means ``relaxation_error + endpoint_error < eps`` on a fresh
    simulation of the returned control. Raises :class:`BudgetExhausted` with
    the best report when ``n_osc_max`` is reached first.
    """
    _check_chain(chain)
    if not eps > 0:
        raise ValueError("eps must be positive")
    params = {
        "eps": eps, "tau": tau, "pieces": pieces, "n_osc_start": n_osc_start, "n_osc_max": n_osc_max,
        "taper_width": taper_width, "window": window, "steps_per_phase": steps_per_phase,
        "refit": refit, "grid_steps": grid_steps, "reanchor": reanchor,
    }
    if chain.n_X == 0:
        return _onto_control(sys, psi, tau, grid_steps, params)
    if reanchor:
        return _synthesize_reanchored(sys, chain, psi, eps, tau, params)
    return _synthesize_global(sys, chain, psi, eps, tau, params)


def _min_phase_steps(chain, n_list, params, pieces):
    """Steps per phase, raised when needed to honour ``grid_steps`` as a floor."""
    base = _piece_steps(chain, n_list, params["refit"], 1) * pieces
    return max(params["steps_per_phase"], -(-params["grid_steps"] // base))


def _run_reanchored(sys, chain, psi, tau, n, params):
    P = params["pieces"]
    n_list = [n] * chain.n_X
    S = _min_phase_steps(chain, n_list, params, P)
    steps = _piece_steps(chain, n_list, params["refit"], S)
    grid = TimeGrid(tau, steps * P)
    a = psi.initial.copy()
    blocks = []
    zeta_rel = np.zeros(chain.n_X)
    rr = 0.0
    for k, sub in enumerate(grid.split(P)):
        value = anchored_piece_value(sys, psi, a, sub.t0, sub.t0 + sub.tau)
        g, info = _reduce_all(sys, chain, PiecewiseConstant(sub, value[None]), n_list,
                              params["refit"], params["taper_width"], params["window"])
        u, r = _control_from_additive(sys, g)
        rr = max(rr, r)
        blocks.append(u.stages())
        a = simulate_closed_loop(sys, a, u, sub).final
        for rec in info:
            zeta_rel[rec["level"] - 1] = max(zeta_rel[rec["level"] - 1], rec["zeta_relaxation"])
    control = StageSignal(grid, np.concatenate(blocks, axis=0))
    per_level = [{"level": l, "n_osc": n, "zeta_relaxation_max_piece": float(zeta_rel[l - 1])}
                 for l in range(chain.n_X, 0, -1)]
    return _finish(sys, psi, control, per_level, params, rr)


def _synthesize_reanchored(sys, chain, psi, eps, tau, params):
    n = params["n_osc_start"]
    best = None
    while n <= params["n_osc_max"]:
        rep = _run_reanchored(sys, chain, psi, tau, n, params)
        if best is None or rep.total_error < best.total_error:
            best = rep
        if rep.total_error < eps / 2:
            break
        n *= 2
    if best.total_error < eps:
        return best
    best.success = False
    raise BudgetExhausted(best)


def _synthesize_global(sys, chain, psi, eps, tau, params):
    """Open-loop construction; level ``l`` gets the budget ``eps / (2 n_X)``."""
    nX = chain.n_X
    P = params["pieces"]
    budget = eps / (2 * nX)
    n_list = [params["n_osc_start"]] * nX
    per_level = []
    w0 = psi.initial

    def build(n_list):
        S = _min_phase_steps(chain, n_list, params, P)
        grid = TimeGrid(tau, _piece_steps(chain, n_list, params["refit"], S) * P)
        gpc = piecewise_constant_fit(target_to_gamma(sys, psi, grid), P)
        g, info = _reduce_all(sys, chain, gpc, n_list, params["refit"], params["taper_width"], params["window"])
        return grid, g, info

    def contribution(grid, info, g, level):
        idx = nX - level
        before = info[idx]["gamma_in"]
        after = info[idx + 1]["gamma_in"] if idx + 1 < len(info) else g
        x0 = resolve(sys, w0, None, before, grid)
        x1 = resolve(sys, w0, None, after, grid)
        d = SampledSignal(grid, x1.values - x0.values)
        return relaxation_norm(d) + float(np.linalg.norm(d.values[-1]))

    for level in range(nX, 0, -1):
        best = None
        while True:
            grid, g, info = build(n_list)
            c = contribution(grid, info, g, level)
            rec = {"level": level, "n_osc": n_list[level - 1],
                   "zeta_relaxation": info[nX - level]["zeta_relaxation"], "contribution": c}
            if best is None or c < best["contribution"]:
                best = rec
            if c < budget or 2 * n_list[level - 1] > params["n_osc_max"]:
                break
            n_list[level - 1] *= 2
        per_level.append(rec)

    grid, g, info = build(n_list)
    control, rr = _control_from_additive(sys, g)
    rep = _finish(sys, psi, control, per_level, params, rr)
    if rep.total_error < eps:
        return rep
    rep.success = False
    raise BudgetExhausted(rep)
