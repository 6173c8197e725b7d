"""Linear tracking theory: the input-output map, its adjoint, and kernel witnesses.

Here the linear system is written ``z' = A z + B u``, ``y = C z`` with
``z(0) = 0``. The input-output map sends ``u`` to ``y``; when ``B`` is not onto,
an explicit nonzero ``g`` in the kernel of the adjoint shows the range is not
dense, both in L2 and in the relaxation norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from . import _kernels
from .integrate import _stage_array
from .signals import ClosedForm, SampledSignal, Signal, TimeGrid
from .subspace import column_space

ONTO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearTriple:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim == 1:
            B = B[:, None]
        n = A.shape[0]
        C = np.eye(n) if self.C is None else np.atleast_2d(np.asarray(self.C, dtype=np.float64))
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise ValueError("inconsistent dimensions in (A, B, C)")
        if not all(np.all(np.isfinite(M)) for M in (A, B, C)):
            raise ValueError("non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.A.shape[0]


def extended_operators(lin: LinearTriple) -> LinearTriple:
    """The triple whose output is the running integral of the state.

    ``A_ext = [[A, 0], [I, 0]]``, ``B_ext = [B; 0]``, ``C_ext = [0, I]``.
    """
    n, m = lin.n, lin.B.shape[1]
    A = np.block([[lin.A, np.zeros((n, n))], [np.eye(n), np.zeros((n, n))]])
    B = np.vstack([lin.B, np.zeros((n, m))])
    C = np.hstack([np.zeros((n, n)), np.eye(n)])
    return LinearTriple(A, B, C)


def apply_forward_map(lin: LinearTriple, u: Signal, grid: TimeGrid) -> SampledSignal:
    """``y(t) = C int_0^t exp((t - s) A) B u(s) ds`` via one RK4 pass."""
    forcing = _stage_array(u, grid, lin.B.shape[1]) @ lin.B.T
    z = _kernels.rk4_linear(lin.A, np.zeros(lin.n), np.ascontiguousarray(forcing), grid.h)
    return SampledSignal(grid, z @ lin.C.T)


def _backward_adjoint(lin, g, grid):
    """Node values of ``q(s) = int_s^tau exp((t - s) A*) C* g(t) dt``."""
    forcing = _stage_array(g, grid, lin.C.shape[0]) @ lin.C
    # reverse time: r(s) = q(tau - s) solves r' = A* r + C* g(tau - s)
    rev = np.ascontiguousarray(forcing[::-1, ::-1])
    r = _kernels.rk4_linear(np.ascontiguousarray(lin.A.T), np.zeros(lin.n), rev, grid.h)
    return r[::-1]


def apply_adjoint(lin: LinearTriple, g: Signal, grid: TimeGrid) -> SampledSignal:
    """``(Psi g)(s) = B* q(s)`` with ``q`` from the backward adjoint equation."""
    return SampledSignal(grid, _backward_adjoint(lin, g, grid) @ lin.B)


def inner_product(a: SampledSignal, b: SampledSignal) -> float:
    """L2 inner product of node-sampled signals by composite Simpson."""
    return float(simpson(np.sum(a.values * b.values, axis=1), dx=a.grid.h))


def duality_residual(lin: LinearTriple, u: Signal, g: Signal, grid: TimeGrid) -> float:
    """``|<F u, g> - <u, Psi g>| / (|u| |g|)`` in L2."""
    us = SampledSignal(grid, u.nodes())
    gs = SampledSignal(grid, g.nodes())
    lhs = inner_product(apply_forward_map(lin, u, grid), gs)
    rhs = inner_product(us, apply_adjoint(lin, g, grid))
    scale = np.sqrt(inner_product(us, us) * inner_product(gs, gs))
    return float(abs(lhs - rhs) / scale)


@dataclass(frozen=True, eq=False)
class OntoResult:
    onto: bool
    null_basis: np.ndarray  # rows span the kernel of B*


def onto_check(B, tol=ONTO_TOL) -> OntoResult:
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    span = column_space(B, tol)
    null = span.complement().vectors if span.dim < B.shape[0] else np.zeros((0, B.shape[0]))
    return OntoResult(null.shape[0] == 0, null)


class NoWitness(ValueError):
    """Raised when ``eta`` is not in the kernel of ``B*`` (or no such ``eta`` exists)."""


def kernel_witness(lin: LinearTriple, eta, grid: TimeGrid) -> ClosedForm:
    """``g(t) = -(tau - t) A* eta + eta``; the adjoint maps it to zero."""
    eta = np.asarray(eta, dtype=np.float64).ravel()
    if not np.any(eta):
        raise NoWitness("eta must be nonzero")
    if np.linalg.norm(lin.B.T @ eta) > ONTO_TOL * max(1.0, np.linalg.norm(eta)):
        raise NoWitness("eta is not in the kernel of B*")
    return witness_shape(lin, eta, grid)


def witness_shape(lin: LinearTriple, eta, grid: TimeGrid) -> ClosedForm:
    """The witness formula without the kernel precondition."""
    eta = np.asarray(eta, dtype=np.float64).ravel()
    Ae = lin.A.T @ eta
    end = grid.t0 + grid.tau
    return ClosedForm(
        grid,
        lambda t: -(end - t)[:, None] * Ae[None, :] + eta[None, :],
        lambda t: np.broadcast_to(Ae, (t.size, eta.size)),
        dim=eta.size,
    )


def witness_identity_residual(lin: LinearTriple, eta, grid: TimeGrid) -> float:
    """sup_s |int_s^tau exp((t - s) A*) g(t) dt - (tau - s) eta| for the witness."""
    eta = np.asarray(eta, dtype=np.float64).ravel()
    g = witness_shape(lin, eta, grid)
    q = _backward_adjoint(LinearTriple(lin.A, lin.B), g, grid)
    expected = (grid.t0 + grid.tau - grid.nodes)[:, None] * eta[None, :]
    return float(np.max(np.linalg.norm(q - expected, axis=1)))


def extended_weak_adjoint(lin: LinearTriple, g: Signal, grid: TimeGrid) -> SampledSignal:
    """Adjoint of the relaxation-norm tracking map (state output, ``C = I``).

    ``(Psi_ext g)(s) = B* int_s^tau q(r) dr`` with ``q`` the ordinary backward
    adjoint state; the outer integral is a cumulative Simpson rule.
    """
    q = _backward_adjoint(LinearTriple(lin.A, lin.B), g, grid)
    rev = q[::-1]
    tail = np.zeros_like(q)
    tail[1:] = cumulative_simpson(rev, dx=grid.h, axis=0)
    Q = tail[::-1]
    return SampledSignal(grid, Q @ lin.B)


def max_norm(sig: SampledSignal) -> float:
    return float(np.max(np.linalg.norm(sig.values, axis=1)))
