"""Systems driven by a quadratic control system, and motion planning through them.

The driven state obeys ``z' + Gt(z, x) + F(z) = 0`` where ``x`` is the state of
a :class:`QuadraticSystem`. Steering ``x`` in the relaxation norm steers ``z``
uniformly, which turns the driver into a dynamic controller for ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, OrthantViolation
from .integrate import resolve_coupled, resolve_driven
from .signals import SampledSignal, Signal, TimeGrid, Trajectory, relaxation_norm
from .synthesis import TargetCurve, synthesize_tracking_control, tracking_errors
from .system import QuadraticSystem

# ---------------------------------------------------------------------------
# the F registry


class DrivenTerm:
    """``F(z) = c0 + M z + c1 * z + c2 * z**2 + c3 * z**3`` (powers componentwise)."""

    def __init__(self, kind, M=None, coeffs=None, n_z=None):
        self.kind = kind
        self.M = None if M is None else np.asarray(M, dtype=np.float64)
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=np.float64)
        self.n_z = n_z

    def arrays(self, n_z):
        M = np.zeros((n_z, n_z)) if self.M is None else self.M
        P = np.zeros((4, n_z)) if self.coeffs is None else self.coeffs
        if M.shape != (n_z, n_z) or P.shape != (4, n_z):
            raise ConfigError(f"F parameters do not match n_z = {n_z}")
        return np.ascontiguousarray(M), np.ascontiguousarray(P)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        M, P = self.arrays(z.shape[-1])
        return z @ M.T + P[0] + z * (P[1] + z * (P[2] + z * P[3]))

    def jacobian_apply(self, z, v):
        """``DF(z) v`` for stacks of ``z`` and ``v``."""
        z = np.asarray(z, dtype=np.float64)
        M, P = self.arrays(z.shape[-1])
        return v @ M.T + (P[1] + z * (2 * P[2] + 3 * z * P[3])) * v

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "linear":
            d["M"] = self.M.tolist()
        if self.kind == "polynomial":
            d["coeffs"] = self.coeffs.tolist()
        return d


def make_F(kind: str, n_z: int, **params) -> DrivenTerm:
    """``zero``, ``linear`` (``M``) or componentwise ``polynomial`` (``coeffs``, shape (4, n_z))."""
    if kind == "zero":
        if params:
            raise ConfigError(f"unexpected F parameters {sorted(params)}")
        return DrivenTerm("zero", n_z=n_z)
    if kind == "linear":
        M = np.asarray(params.pop("M"), dtype=np.float64)
        if params or M.shape != (n_z, n_z):
            raise ConfigError("linear F takes a single n_z x n_z matrix M")
        return DrivenTerm("linear", M=M, n_z=n_z)
    if kind == "polynomial":
        c = np.asarray(params.pop("coeffs"), dtype=np.float64)
        if params or c.shape != (4, n_z):
            raise ConfigError("polynomial F takes coeffs of shape (4, n_z), degrees 0..3")
        return DrivenTerm("polynomial", coeffs=c, n_z=n_z)
    raise ConfigError(f"unknown F kind {kind!r}")


@dataclass(frozen=True, eq=False)
class CoupledSystem:
    driver: QuadraticSystem
    Gamma_tilde: np.ndarray  # (n_z, n_z, n_x): Gt(z, x)_a = sum_ij Gt[a, i, j] z_i x_j
    F: DrivenTerm

    @property
    def n_z(self):
        return self.Gamma_tilde.shape[0]

    def coupling(self, z, x):
        return np.einsum("aij,...i,...j->...a", self.Gamma_tilde, z, x)

    def to_dict(self):
        return {"n_z": self.n_z, "Gamma_tilde": self.Gamma_tilde.tolist(), "F": self.F.to_dict()}


def make_coupled(driver: QuadraticSystem, Gamma_tilde, F: DrivenTerm | None = None) -> CoupledSystem:
    Gt = np.asarray(Gamma_tilde, dtype=np.float64)
    if Gt.ndim != 3 or Gt.shape[1] != Gt.shape[0] or Gt.shape[2] != driver.n_x:
        raise ConfigError(f"Gamma_tilde must have shape (n_z, n_z, {driver.n_x})")
    if not np.all(np.isfinite(Gt)):
        raise ConfigError("Gamma_tilde has non-finite entries")
    F = make_F("zero", Gt.shape[0]) if F is None else F
    F.arrays(Gt.shape[0])
    Gt = np.ascontiguousarray(Gt)
    Gt.setflags(write=False)
    return CoupledSystem(driver, Gt, F)


def componentwise_product(d: int) -> np.ndarray:
    Gt = np.zeros((d, d, d))
    for i in range(d):
        Gt[i, i, i] = 1.0
    return Gt


# ---------------------------------------------------------------------------
# reference planning


class SmoothFit:
    """Least-squares fit by polynomials (degree <= 6) and 3 Fourier harmonics."""

    DEGREE = 6
    HARMONICS = 3

    def __init__(self, grid: TimeGrid, values):
        self.t0, self.tau = grid.t0, grid.tau
        values = np.asarray(values, dtype=np.float64)
        self.coef = np.linalg.lstsq(self._design(grid.nodes, 0), values, rcond=None)[0]

    def _design(self, t, order):
        s = (np.asarray(t, dtype=np.float64) - self.t0) / self.tau
        cols = []
        for k in range(self.DEGREE + 1):
            if k < order:
                cols.append(np.zeros_like(s))
            else:
                c = np.prod(np.arange(k, k - order, -1)) if order else 1.0
                cols.append(c * s ** (k - order))
        for k in range(1, self.HARMONICS + 1):
            w = 2 * np.pi * k
            # d^order/ds^order of sin, cos cycles with phase shifts of pi/2
            cols.append(w**order * np.sin(w * s + order * np.pi / 2))
            cols.append(w**order * np.cos(w * s + order * np.pi / 2))
        return np.stack(cols, axis=-1) / self.tau**order

    def __call__(self, t, order=0):
        return self._design(np.atleast_1d(t), order) @ self.coef


@dataclass(eq=False)
class ReferencePair:
    z_bar: Trajectory
    x_bar: Trajectory
    x_target: TargetCurve  # x_bar as a differentiable curve for synthesis
    z_curve: object = None  # callable t -> z_bar(t) when available
    z_dot: object = None  # callable t -> z_bar'(t) when available

    def z_at(self, grid: TimeGrid):
        if self.z_curve is not None:
            return self.z_curve(grid.nodes)
        t = self.z_bar.grid.nodes
        return np.stack([np.interp(grid.nodes, t, c) for c in self.z_bar.values.T], axis=-1)


def reference_residual(coupled: CoupledSystem, pair: ReferencePair) -> float:
    """sup |z_bar' + Gt(z_bar, x_bar) + F(z_bar)| over the nodes.

    Uses the exact derivative when the pair carries one, central differences otherwise.
    """
    z, x = pair.z_bar.values, pair.x_bar.values
    if pair.z_dot is not None:
        dz = pair.z_dot(pair.z_bar.grid.nodes)
    else:
        dz = np.gradient(z, pair.z_bar.grid.h, axis=0, edge_order=2)
    r = dz + coupled.coupling(z, x) + coupled.F(z)
    return float(np.max(np.linalg.norm(r, axis=1)))


def _is_componentwise(coupled):
    d = coupled.n_z
    return coupled.driver.n_x == d and np.array_equal(coupled.Gamma_tilde, componentwise_product(d))


def plan_reference(coupled: CoupledSystem, z_ref: Trajectory, eps: float, check_refine: int = 4) -> ReferencePair:
    """Smooth ``z_ref`` and solve ``x_bar_l = -(F_l(z_bar) + z_bar_l') / z_bar_l``.

    Needs the componentwise coupling ``Gt(z, x) = z * x``. Raises
    :class:`OrthantViolation` if a component of the smoothed reference
    reaches zero and ``ValueError`` if the fit strays ``eps / 2`` from ``z_ref``.
    """
    if not _is_componentwise(coupled):
        raise ValueError("planning needs the componentwise coupling; supply an external pair instead")
    grid = z_ref.grid
    fit = SmoothFit(grid, z_ref.values)
    fine = grid.refine(check_refine).nodes
    zf = fit(fine)
    for l in range(coupled.n_z):
        if not (np.all(zf[:, l] > 0) or np.all(zf[:, l] < 0)):
            raise OrthantViolation(f"component {l} of the smoothed reference changes sign")
    dist = float(np.max(np.linalg.norm(fit(grid.nodes) - z_ref.values, axis=1)))
    if dist >= eps / 2:
        raise ValueError(f"smoothed reference is {dist:.3g} away from z_ref (needs < eps/2)")
    F = coupled.F

    def xbar(t):
        z, dz = fit(t), fit(t, 1)
        return -(F(z) + dz) / z

    def xbar_dot(t):
        z, dz, ddz = fit(t), fit(t, 1), fit(t, 2)
        num = F(z) + dz
        dnum = F.jacobian_apply(z, dz) + ddz
        return -(dnum * z - num * dz) / z**2

    target = TargetCurve(xbar, xbar_dot, coupled.n_z)
    return ReferencePair(Trajectory(grid, fit(grid.nodes)), Trajectory(grid, xbar(grid.nodes)), target, fit,
                         lambda t: fit(t, 1))


def external_pair(z_curve, x_target: TargetCurve, grid: TimeGrid, z_dot=None) -> ReferencePair:
    """Pair supplied by the caller: ``z_curve(t)`` and the driver target ``x_target``."""
    return ReferencePair(Trajectory(grid, z_curve(grid.nodes)), Trajectory(grid, x_target.nodes(grid)),
                         x_target, z_curve, z_dot)


# ---------------------------------------------------------------------------
# tracking and the Hoelder probe


def track_coupled(coupled: CoupledSystem, chain, ref: ReferencePair, eps: float, halvings: int = 6, **synth):
    """Steer ``x`` near ``x_bar`` so that ``z`` follows ``z_bar`` uniformly.

    The driver budget starts at ``eps`` and is halved until the combined error
    ``sup|z - z_bar| + |x(tau) - x_bar(tau)| + |||x - x_bar|||`` is below ``eps``.
    """
    tau = ref.z_bar.grid.tau
    x0 = ref.x_target.initial
    z0 = ref.z_bar.values[0]
    eps_x = eps
    best = None
    for attempt in range(halvings + 1):
        rep = synthesize_tracking_control(coupled.driver, chain, ref.x_target, eps_x, tau=tau, **synth)
        grid = rep.control.grid
        x, z = resolve_coupled(coupled, x0, z0, rep.control, grid)
        xe = tracking_errors(x, ref.x_target.nodes(grid))
        z_err = float(np.max(np.linalg.norm(z.values - ref.z_at(grid), axis=1)))
        total = z_err + xe["endpoint_error"] + xe["relaxation_error"]
        result = {
            "control": rep.control, "x": x, "z": z, "eps_x": eps_x, "halvings": attempt,
            "errors": {"z_sup_error": z_err, "x_endpoint_error": xe["endpoint_error"],
                       "x_relaxation_error": xe["relaxation_error"], "total": total},
            "synthesis": rep,
        }
        if best is None or total < best["errors"]["total"]:
            best = result
        if total < eps:
            break
        eps_x /= 2
    best["success"] = best["errors"]["total"] < eps
    return best


@dataclass(frozen=True)
class HolderResult:
    lhs: float
    rhs_base: float
    ratio: float


def holder_probe(coupled: CoupledSystem, z0, x_tilde: Signal, x_hat: Signal) -> HolderResult:
    """``sup|z_tilde - z_hat|`` against ``|||x_tilde - x_hat|||^(1/2)``."""
    grid = x_tilde.grid
    zt = resolve_driven(coupled, z0, x_tilde, grid)
    zh = resolve_driven(coupled, z0, x_hat, grid)
    lhs = float(np.max(np.linalg.norm(zt.values - zh.values, axis=1)))
    base = np.sqrt(relaxation_norm(x_tilde - x_hat))
    ratio = lhs / base if base > 0 else (0.0 if lhs == 0 else np.inf)
    return HolderResult(lhs, float(base), float(ratio))
