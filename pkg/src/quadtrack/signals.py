"""Time grids, signals, and the norms used to measure tracking.

Every signal lives on a uniform :class:`TimeGrid` and can report its values at
the three RK4 stage times of each step (``stages()``, shape ``(N, 3, d)``):
the right limit at ``t_k``, the midpoint, and the left limit at ``t_{k+1}``.
Jumps are only allowed on grid nodes, so this is always well defined.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import integrate

STAGE_OFFSETS = np.array([0.0, 0.5, 1.0])


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    steps: int
    t0: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")

    @property
    def h(self) -> float:
        return self.tau / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.tau * np.arange(self.steps + 1) / self.steps

    @property
    def stage_times(self) -> np.ndarray:
        k = np.arange(self.steps)[:, None] + STAGE_OFFSETS[None, :]
        return self.t0 + self.tau * k / self.steps

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.tau, self.steps * factor, self.t0)

    def split(self, pieces: int):
        """Sub-grids of equal length; ``steps`` must be divisible by ``pieces``."""
        if self.steps % pieces:
            raise ValueError(f"{self.steps} steps not divisible into {pieces} pieces")
        n = self.steps // pieces
        return [TimeGrid(self.tau / pieces, n, self.t0 + self.tau * j / pieces) for j in range(pieces)]


def simpson_steps(stages, h):
    """Per-step Simpson integrals from stage values, shape ``(N, d)``."""
    return h / 6.0 * (stages[:, 0] + 4.0 * stages[:, 1] + stages[:, 2])


class Signal:
    """Base class; subclasses implement ``stages``."""

    grid: TimeGrid
    dim: int
    kind = "signal"

    def stages(self) -> np.ndarray:
        raise NotImplementedError

    def nodes(self) -> np.ndarray:
        st = self.stages()
        return np.concatenate([st[:, 0], st[-1:, 2]], axis=0)

    def step_integrals(self) -> np.ndarray:
        return simpson_steps(self.stages(), self.grid.h)

    def integral_nodes(self) -> np.ndarray:
        inc = self.step_integrals()
        out = np.zeros((self.grid.steps + 1, self.dim))
        np.cumsum(inc, axis=0, out=out[1:])
        return out

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __neg__(self):
        return StageSignal(self.grid, -self.stages())

    def scaled(self, c):
        return StageSignal(self.grid, c * self.stages())


def _combine(a, b, sign):
    if a.grid != b.grid:
        raise ValueError("signals live on different grids")
    if isinstance(a, SampledSignal) and isinstance(b, SampledSignal):
        return SampledSignal(a.grid, a.values + sign * b.values)
    return StageSignal(a.grid, a.stages() + sign * b.stages())


class SampledSignal(Signal):
    """Node samples with linear interpolation between nodes."""

    kind = "sampled"

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.steps + 1:
            raise ValueError(f"expected {grid.steps + 1} samples, got {values.shape[0]}")
        self.grid = grid
        self.values = values
        self.dim = values.shape[1]

    def stages(self):
        v = self.values
        return np.stack([v[:-1], 0.5 * (v[:-1] + v[1:]), v[1:]], axis=1)

    def nodes(self):
        return self.values

    def step_integrals(self):
        v = self.values
        return 0.5 * self.grid.h * (v[:-1] + v[1:])


class Trajectory(SampledSignal):
    """State samples on every grid node."""

    kind = "trajectory"

    @property
    def samples(self):
        return self.values

    @property
    def final(self):
        return self.values[-1]


class StageSignal(Signal):
    """Explicit stage values; the general output of signal arithmetic."""

    kind = "stage"

    def __init__(self, grid: TimeGrid, stage_values, derivative=None):
        st = np.asarray(stage_values, dtype=np.float64)
        if st.ndim == 2:
            st = st[:, :, None]
        if st.shape[:2] != (grid.steps, 3):
            raise ValueError(f"stage array must have shape ({grid.steps}, 3, d), got {st.shape}")
        self.grid = grid
        self._stages = st
        self._derivative = derivative
        self.dim = st.shape[2]

    def stages(self):
        return self._stages

    def derivative_stages(self):
        if self._derivative is None:
            raise ValueError("no closed-form derivative attached")
        return self._derivative


class ClosedForm(Signal):
    """Signal given by vectorized callables ``value(t)`` and optional ``deriv(t)``."""

    kind = "closed_form"

    def __init__(self, grid: TimeGrid, value, deriv=None, dim=None):
        self.grid = grid
        self._value = value
        self._deriv = deriv
        if dim is None:
            dim = np.atleast_2d(value(np.array([grid.t0]))).shape[-1]
        self.dim = dim

    def _eval(self, fn):
        t = self.grid.stage_times.ravel()
        return np.asarray(fn(t), dtype=np.float64).reshape(self.grid.steps, 3, self.dim)

    def stages(self):
        return self._eval(self._value)

    def derivative_stages(self):
        if self._deriv is None:
            raise ValueError("no closed-form derivative attached")
        return self._eval(self._deriv)


class PiecewiseConstant(Signal):
    """``P`` equal pieces, each holding one constant vector."""

    kind = "piecewise_constant"

    def __init__(self, grid: TimeGrid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        P = values.shape[0]
        if grid.steps % P:
            raise ValueError(f"{grid.steps} steps not divisible into {P} pieces")
        self.grid = grid
        self.values = values
        self.dim = values.shape[1]

    @property
    def pieces(self) -> int:
        return self.values.shape[0]

    def step_values(self):
        return np.repeat(self.values, self.grid.steps // self.pieces, axis=0)

    def stages(self):
        return np.repeat(self.step_values()[:, None, :], 3, axis=1)

    def step_integrals(self):
        return self.grid.h * self.step_values()

    def derivative_stages(self):
        return np.zeros((self.grid.steps, 3, self.dim))


# ---------------------------------------------------------------------------
# smooth ramp and bump profiles built from exp(-1/s)


def _phi(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _dphi(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.exp(-1.0 / xp) / (xp * xp)
    return out


def ramp(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    a, b = _phi(x), _phi(1.0 - np.asarray(x, dtype=np.float64))
    return a / (a + b)


def ramp_deriv(x):
    x = np.asarray(x, dtype=np.float64)
    a, b = _phi(x), _phi(1.0 - x)
    da, db = _dphi(x), -_dphi(1.0 - x)
    return (da * b - a * db) / (a + b) ** 2


def bump(u, window):
    """Profile on [0, 1]: rises over ``[0, window]``, flat, falls over ``[1 - window, 1]``."""
    u = np.asarray(u, dtype=np.float64)
    return ramp(u / window) * ramp((1.0 - u) / window)


def bump_deriv(u, window):
    u = np.asarray(u, dtype=np.float64)
    return (
        ramp_deriv(u / window) * ramp((1.0 - u) / window)
        - ramp(u / window) * ramp_deriv((1.0 - u) / window)
    ) / window


@functools.lru_cache(maxsize=None)
def bump_mean_square(window: float) -> float:
    val, _ = integrate.quad(lambda u: float(bump(u, window)) ** 2, 0.0, 1.0, limit=200, epsabs=1e-14)
    return val


# ---------------------------------------------------------------------------
# oscillating multiplicative inputs


class PhaseWave(Signal):
    """Square wave: ``P`` pieces, each with ``n`` cycles of ``m`` constant phases.

    ``levels[j, i]`` is the value of phase ``i`` in piece ``j``. Jumps sit on
    grid nodes, so ``steps`` must be divisible by ``P * n * m``.
    """

    kind = "square_wave"

    def __init__(self, grid: TimeGrid, levels, cycles: int):
        levels = np.asarray(levels, dtype=np.float64)
        if levels.ndim == 2:
            levels = levels[None]
        P, m, d = levels.shape
        if grid.steps % (P * cycles * m):
            raise ValueError(
                f"grid of {grid.steps} steps cannot hold {P} pieces x {cycles} cycles x {m} phases"
            )
        self.grid = grid
        self.levels = levels
        self.cycles = int(cycles)
        self.dim = d

    @property
    def pieces(self):
        return self.levels.shape[0]

    @property
    def phases(self):
        return self.levels.shape[1]

    @property
    def steps_per_phase(self):
        return self.grid.steps // (self.pieces * self.cycles * self.phases)

    @property
    def phase_length(self):
        return self.grid.tau / (self.pieces * self.cycles * self.phases)

    def _step_phase(self):
        S, m, n = self.steps_per_phase, self.phases, self.cycles
        j = np.arange(self.grid.steps) // S
        return j // (n * m), j % m

    def step_values(self):
        piece, phase = self._step_phase()
        return self.levels[piece, phase]

    def stages(self):
        return np.repeat(self.step_values()[:, None, :], 3, axis=1)

    def step_integrals(self):
        return self.grid.h * self.step_values()

    def smoothed(self, window=0.25):
        return SmoothPhaseWave(self, window)


class SmoothPhaseWave(Signal):
    """Smooth surrogate of a :class:`PhaseWave`.

    Each phase value is multiplied by ``kappa * bump(u)`` where ``u`` is the
    position inside the phase, so the signal vanishes with all derivatives at
    every phase boundary. ``kappa = 1/sqrt(mean(bump^2))`` keeps the per-phase
    mean of ``f(w + zeta)`` identical to the square wave's for quadratic ``f``.
    """

    kind = "smooth_square_wave"

    def __init__(self, wave: PhaseWave, window=0.25):
        if not 0 < window <= 0.5:
            raise ValueError("window must lie in (0, 1/2]")
        self.wave = wave
        self.window = float(window)
        self.kappa = 1.0 / np.sqrt(bump_mean_square(self.window))
        self.grid = wave.grid
        self.dim = wave.dim

    def _local(self):
        S = self.wave.steps_per_phase
        k = np.arange(self.grid.steps)
        u = ((k % S)[:, None] + STAGE_OFFSETS[None, :]) / S
        return u

    def stages(self):
        prof = self.kappa * bump(self._local(), self.window)
        return prof[:, :, None] * self.wave.step_values()[:, None, :]

    def derivative_stages(self):
        dprof = self.kappa * bump_deriv(self._local(), self.window) / self.wave.phase_length
        return dprof[:, :, None] * self.wave.step_values()[:, None, :]


class Tapered(Signal):
    """``inner`` multiplied by a bump that is 0 at both ends of the grid."""

    kind = "tapered"

    def __init__(self, inner: Signal, taper_width: float):
        if not 0 < taper_width < 0.25:
            raise ValueError("taper_width must lie in (0, 1/4)")
        self.inner = inner
        self.taper_width = float(taper_width)
        self.grid = inner.grid
        self.dim = inner.dim

    def _profile(self):
        g = self.grid
        s = (g.stage_times - g.t0) / g.tau
        w = self.taper_width
        b = ramp(s / w) * ramp((1.0 - s) / w)
        db = (ramp_deriv(s / w) * ramp((1.0 - s) / w) - ramp(s / w) * ramp_deriv((1.0 - s) / w)) / (w * g.tau)
        return b, db

    def stages(self):
        b, _ = self._profile()
        return b[:, :, None] * self.inner.stages()

    def derivative_stages(self):
        b, db = self._profile()
        return db[:, :, None] * self.inner.stages() + b[:, :, None] * self.inner.derivative_stages()


def square_wave(xis, n: int, grid: TimeGrid) -> PhaseWave:
    """Zero-mean wave with ``m = 2p`` phases of amplitude ``sqrt(m/2)``.

    Phases are ordered ``+xi_1, -xi_1, +xi_2, -xi_2, ...`` so the running
    integral returns to zero after every pair.
    """
    xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    p = xis.shape[0]
    if p < 1:
        raise ValueError("need at least one xi")
    return PhaseWave(grid, phase_levels(xis)[None], n)


def phase_levels(xis):
    """(m, d) phase values for one piece from ``p`` vectors ``xi_i``."""
    xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    p, d = xis.shape
    amp = np.sqrt(p)  # sqrt(m/2) with m = 2p
    out = np.empty((2 * p, d))
    out[0::2] = amp * xis
    out[1::2] = -amp * xis
    return out


# ---------------------------------------------------------------------------
# norms and integral operators


def running_integral(v: Signal) -> SampledSignal:
    """The integral operator t -> int_0^t v, sampled on the grid nodes."""
    return SampledSignal(v.grid, v.integral_nodes())


def relaxation_norm(v: Signal) -> float:
    """sup_t |int_0^t v(s) ds| over the grid nodes."""
    return float(np.max(np.linalg.norm(v.integral_nodes(), axis=1)))


def sup_norm(v: Signal) -> float:
    if isinstance(v, SampledSignal):
        return float(np.max(np.linalg.norm(v.values, axis=1)))
    return float(np.max(np.linalg.norm(v.stages(), axis=2)))


def _norm_integral(v: Signal, power):
    if isinstance(v, SampledSignal):
        a = np.linalg.norm(v.values, axis=1) ** power
        return float(np.trapezoid(a, dx=v.grid.h))
    a = np.linalg.norm(v.stages(), axis=2) ** power
    return float(np.sum(v.grid.h / 6.0 * (a[:, 0] + 4 * a[:, 1] + a[:, 2])))


def l1_norm(v: Signal) -> float:
    return _norm_integral(v, 1)


def l2_norm(v: Signal) -> float:
    return float(np.sqrt(_norm_integral(v, 2)))


def taper_to_compact_support(zeta: Signal, taper_width: float) -> Tapered:
    return Tapered(zeta, taper_width)


def lemma52_probe(sys, w1, xis, n: int) -> float:
    """sup-norm of the running integral of the averaging defect h_n.

    h_n = f(w1 + zeta_n) - (1/m) sum_i f(w1 + zeta^i) + A zeta_n, with zeta_n
    the m-phase wave built from ``xis``; it tends to zero like 1/n.
    """
    from .system import eval_f

    wave = square_wave(xis, n, w1.grid)
    W = w1.stages()  # (N, 3, d)
    Z = wave.stages()
    levels = wave.levels[0]
    avg = np.mean(eval_f(sys, W[:, :, None, :] + levels[None, None, :, :]), axis=2)
    h = eval_f(sys, W + Z) - avg + Z @ sys.A.T
    return relaxation_norm(StageSignal(w1.grid, h))
