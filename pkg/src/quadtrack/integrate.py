"""Fixed-step RK4 for the enlarged, closed-loop and coupled systems."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .exceptions import BlowUp
from .signals import Signal, TimeGrid, Trajectory

BLOWUP_THRESHOLD = 1e8


def _stage_array(sig, grid, dim):
    if sig is None:
        return np.zeros((grid.steps, 3, dim))
    if isinstance(sig, Signal):
        if sig.grid != grid:
            raise ValueError("signal grid does not match the integration grid")
        st = sig.stages()
    else:
        st = np.asarray(sig, dtype=np.float64)
    if st.shape != (grid.steps, 3, dim):
        raise ValueError(f"expected stage array of shape {(grid.steps, 3, dim)}, got {st.shape}")
    return np.ascontiguousarray(st, dtype=np.float64)


def _check_state(v, n, name):
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} is not finite")
    return v


def resolve(sys, w0, zeta, gamma, grid: TimeGrid, threshold=BLOWUP_THRESHOLD) -> Trajectory:
    """Resolving operator R(w0, zeta, gamma) of w' + A(w + zeta) + f(w + zeta) = gamma.

    ``zeta`` and ``gamma`` are signals on ``grid`` (or raw stage arrays);
    ``None`` stands for the zero signal.
    """
    n = sys.n_x
    w0 = _check_state(w0, n, "w0")
    Z = _stage_array(zeta, grid, n)
    Gm = _stage_array(gamma, grid, n)
    out, idx = _kernels.rk4_extended(sys.A, sys.Gamma, w0, Z, Gm, grid.h, threshold)
    if idx >= 0:
        raise BlowUp(grid.t0 + (idx + 1) * grid.h, threshold)
    return Trajectory(grid, out)


def control_to_additive(sys, u, grid):
    U = _stage_array(u, grid, sys.n_u)
    return U @ sys.B.T


def simulate_closed_loop(sys, x0, u, grid: TimeGrid, threshold=BLOWUP_THRESHOLD) -> Trajectory:
    """x' + A x + f(x) = B u from ``x0``; ``u`` is a signal over the control space."""
    return resolve(sys, x0, None, control_to_additive(sys, u, grid), grid, threshold)


def resolve_coupled(coupled, x0, z0, u, grid: TimeGrid, threshold=BLOWUP_THRESHOLD):
    """Simultaneous RK4 for the driver x and the driven state z."""
    sys = coupled.driver
    x0 = _check_state(x0, sys.n_x, "x0")
    z0 = _check_state(z0, coupled.n_z, "z0")
    gamma = control_to_additive(sys, u, grid)
    M, P = coupled.F.arrays(coupled.n_z)
    X, Z, idx = _kernels.rk4_coupled(
        sys.A, sys.Gamma, coupled.Gamma_tilde, M, P, x0, z0, np.ascontiguousarray(gamma), grid.h, threshold
    )
    if idx >= 0:
        raise BlowUp(grid.t0 + (idx + 1) * grid.h, threshold)
    return Trajectory(grid, X), Trajectory(grid, Z)


def resolve_driven(coupled, z0, x_driver, grid: TimeGrid, threshold=BLOWUP_THRESHOLD) -> Trajectory:
    """z' + Gt(z, x) + F(z) = 0 for a prescribed driver signal ``x_driver``."""
    z0 = _check_state(z0, coupled.n_z, "z0")
    X = _stage_array(x_driver, grid, coupled.driver.n_x)
    M, P = coupled.F.arrays(coupled.n_z)
    Z, idx = _kernels.rk4_driven(coupled.Gamma_tilde, M, P, z0, X, grid.h, threshold)
    if idx >= 0:
        raise BlowUp(grid.t0 + (idx + 1) * grid.h, threshold)
    return Trajectory(grid, Z)
