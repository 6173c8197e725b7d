"""Quadratic control systems  x' + A x + f(x) = B u  with f(x) = Gamma(x, x)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError

SYSTEM_FIELDS = ("n_x", "n_u", "A", "B", "Gamma")


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticSystem:
    """Linear drift ``A``, control map ``B`` and symmetric bilinear form ``Gamma``.

    ``Gamma`` has shape ``(n_x, n_x, n_x)``; slice ``Gamma[k]`` is the symmetric
    matrix of output component ``k``, so ``f(x)[k] = x @ Gamma[k] @ x``.
    """

    A: np.ndarray
    B: np.ndarray
    Gamma: np.ndarray

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    def f(self, x):
        return eval_f(self, x)

    def to_dict(self) -> dict:
        return {
            "n_x": self.n_x,
            "n_u": self.n_u,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "Gamma": self.Gamma.tolist(),
        }


def make_system(A, B, Gamma_raw=None) -> QuadraticSystem:
    """Build a system, symmetrizing every component of ``Gamma_raw``.

    ``Gamma_raw=None`` gives the linear system (f = 0).
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigError(f"A must be square, got shape {A.shape}")
    if B.ndim != 2 or B.shape[0] != n:
        raise ConfigError(f"B must have {n} rows, got shape {B.shape}")
    if Gamma_raw is None:
        G = np.zeros((n, n, n))
    else:
        G = np.asarray(Gamma_raw, dtype=np.float64)
        if G.shape != (n, n, n):
            raise ConfigError(f"Gamma must have shape {(n, n, n)}, got {G.shape}")
    for name, arr in (("A", A), ("B", B), ("Gamma", G)):
        if not np.all(np.isfinite(arr)):
            raise ConfigError(f"{name} has non-finite entries")
    G = 0.5 * (G + G.transpose(0, 2, 1))
    return QuadraticSystem(_frozen(A), _frozen(B), _frozen(G))


def gamma_from_quadratic(n, terms):
    """Component matrices from monomials ``{(k, i, j): c}`` meaning ``f_k += c x_i x_j``."""
    G = np.zeros((n, n, n))
    for (k, i, j), c in terms.items():
        G[k, i, j] += 0.5 * c
        G[k, j, i] += 0.5 * c
    return G


def eval_f(sys: QuadraticSystem, x):
    """f(x) = Gamma(x, x); accepts a single state or a stack ``(..., n_x)``."""
    x = np.asarray(x, dtype=np.float64)
    return np.einsum("kij,...i,...j->...k", sys.Gamma, x, x)


def bilinear(sys: QuadraticSystem, a, b):
    """Gamma(a, b) evaluated directly from the stored symmetric components."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.einsum("kij,...i,...j->...k", sys.Gamma, a, b)


def polarize(sys: QuadraticSystem, a, b):
    """Gamma(a, b) recovered from f alone: (f(a + b) - f(a - b)) / 4."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    # exact symmetry: a+b == b+a and f(-y) == f(y) hold bit-for-bit
    return 0.25 * (eval_f(sys, a + b) - eval_f(sys, a - b))


def rhs_extended(sys: QuadraticSystem, w, zeta_t, gamma_t):
    """Right-hand side of the enlarged system: -A(w + zeta) - f(w + zeta) + gamma."""
    y = np.asarray(w, dtype=np.float64) + np.asarray(zeta_t, dtype=np.float64)
    return -(y @ sys.A.T) - eval_f(sys, y) + np.asarray(gamma_t, dtype=np.float64)


def rhs_closed_loop(sys: QuadraticSystem, x, u_t):
    x = np.asarray(x, dtype=np.float64)
    return -(x @ sys.A.T) - eval_f(sys, x) + np.asarray(u_t, dtype=np.float64) @ sys.B.T


# ---------------------------------------------------------------------------
# systems used throughout the examples and tests


def lorenz_system(sigma=10.0, rho=28.0, beta=8.0 / 3.0) -> QuadraticSystem:
    A = [[sigma, -sigma, 0.0], [-rho, 1.0, 0.0], [0.0, 0.0, beta]]
    B = [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
    G = gamma_from_quadratic(3, {(1, 1, 2): 1.0, (2, 0, 1): -1.0})
    return make_system(A, B, G)


def example_net_system() -> QuadraticSystem:
    """x1' + x1 x2 = u1,  x2' + x3^2 - x1^2 = 0,  x3' - x3 x2 = u2."""
    B = [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
    G = gamma_from_quadratic(
        3, {(0, 0, 1): 1.0, (1, 2, 2): 1.0, (1, 0, 0): -1.0, (2, 2, 1): -1.0}
    )
    return make_system(np.zeros((3, 3)), B, G)


def six_state_system() -> QuadraticSystem:
    """f = [0, 0, 0, x1 x2, x1 x3, x2 x3] driven through the first three states."""
    B = np.vstack([np.eye(3), np.zeros((3, 3))])
    G = gamma_from_quadratic(6, {(3, 0, 1): 1.0, (4, 0, 2): 1.0, (5, 1, 2): 1.0})
    return make_system(np.zeros((6, 6)), B, G)


def system_from_dict(d: dict) -> QuadraticSystem:
    unknown = set(d) - set(SYSTEM_FIELDS)
    if unknown:
        raise ConfigError(f"unknown system fields: {sorted(unknown)}")
    missing = set(SYSTEM_FIELDS) - set(d)
    if missing:
        raise ConfigError(f"missing system fields: {sorted(missing)}")
    try:
        sys = make_system(d["A"], d["B"], d["Gamma"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if sys.n_x != int(d["n_x"]) or sys.n_u != int(d["n_u"]):
        raise ConfigError("n_x / n_u disagree with the matrix shapes")
    return sys
