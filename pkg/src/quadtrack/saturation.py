"""Certified growth of subspaces under the quadratic drift.

A vector ``gamma`` is representable over a subspace ``E`` when
``gamma = xi_0 - sum_i f(xi_i)`` with every ``xi`` in ``E``. Searches are
bounded least-squares problems solved from seeded random starts, so every
positive answer comes with a certificate that can be re-checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .subspace import SubspaceBasis, column_space, contains, orthonormalize
from .system import QuadraticSystem, eval_f, polarize

DEFAULT_P_MAX = 4
DEFAULT_ATTEMPTS = 64
DEFAULT_CERT_TOL = 1e-9
DEFAULT_XI_CAP = 2.5


@dataclass(frozen=True, eq=False)
class DecompositionCertificate:
    """Witness of ``gamma = xi0 - sum f(xis[i])``."""

    gamma: np.ndarray
    xi0: np.ndarray
    xis: np.ndarray  # (p, n)
    residual: float

    @property
    def p(self) -> int:
        return self.xis.shape[0]

    def recompute_residual(self, sys: QuadraticSystem) -> float:
        total = self.gamma - self.xi0 + eval_f(sys, self.xis).sum(axis=0)
        return float(np.linalg.norm(total))

    def is_valid(self, sys, source: SubspaceBasis, cert_tol=DEFAULT_CERT_TOL) -> bool:
        inside = contains(source, self.xi0) and all(contains(source, x) for x in self.xis)
        return inside and self.recompute_residual(sys) <= cert_tol * (1.0 + np.linalg.norm(self.gamma))

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "xi0": self.xi0.tolist(),
            "xis": self.xis.tolist(),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class NotFound:
    """No certificate within the search budget; ``best_residual`` is the smallest seen."""

    gamma: np.ndarray
    best_residual: float
    p_max: int
    attempts: int

    def to_dict(self) -> dict:
        return {
            "gamma": np.asarray(self.gamma).tolist(),
            "best_residual": self.best_residual,
            "p_max": self.p_max,
            "attempts": self.attempts,
            "note": "not found within the search budget; this is not a proof of nonexistence",
        }


def _search(sys, Q, Qperp, gamma, p, attempts, rng, cap):
    """Best bounded least-squares fit with ``p`` quadratic terms.

    Unknowns are the coordinates of each ``xi_i`` in the rows of ``Q``; the
    ``xi_0`` part is eliminated by projecting onto the complement ``Qperp``.
    Returns ``(residual, coeffs)`` of the best start.
    """
    k = Q.shape[0]
    G = sys.Gamma
    target = Qperp @ gamma

    def fun(c):
        xis = c.reshape(p, k) @ Q
        return target + Qperp @ eval_f(sys, xis).sum(axis=0)

    def jac(c):
        xis = c.reshape(p, k) @ Q
        # d f(xi)/d xi = 2 Gamma(xi, .)
        J = 2.0 * np.einsum("kij,pi->pkj", G, xis)
        return np.concatenate([Qperp @ J[i] @ Q.T for i in range(p)], axis=1)

    best = (np.inf, None)
    for _ in range(attempts):
        x0 = rng.uniform(-cap, cap, size=p * k)
        sol = least_squares(
            fun, x0, jac=jac, bounds=(-cap, cap), method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200
        )
        r = float(np.linalg.norm(sol.fun))
        if r < best[0]:
            best = (r, sol.x)
        if r <= 1e-14 * (1.0 + np.linalg.norm(gamma)):
            break
    return best


def representable(
    sys: QuadraticSystem,
    source: SubspaceBasis,
    gamma,
    p_max: int = DEFAULT_P_MAX,
    attempts: int = DEFAULT_ATTEMPTS,
    seed=0,
    cert_tol: float = DEFAULT_CERT_TOL,
    xi_cap: float = DEFAULT_XI_CAP,
    p_min: int = 0,
):
    """Search for a certificate of ``gamma`` over ``source``.

    ``p`` is swept upward from ``p_min`` and the first certified answer is
    returned. Each ``xi_i`` coordinate is confined to ``|c| <= xi_cap *
    sqrt(|gamma|)`` so that near-misses obtained by sending ``xi`` to infinity
    do not count. Returns a :class:`DecompositionCertificate` or
    :class:`NotFound`.
    """
    if p_max < 0:
        raise ValueError("p_max must be nonnegative")
    gamma = np.asarray(gamma, dtype=np.float64).ravel()
    if gamma.shape != (sys.n_x,) or not np.all(np.isfinite(gamma)):
        raise ValueError("gamma must be a finite state vector")
    n = sys.n_x
    tol = cert_tol * (1.0 + np.linalg.norm(gamma))
    Q = source.vectors
    Qperp = source.complement().vectors if source.dim < n else np.zeros((0, n))
    rng = np.random.default_rng(seed)
    cap = xi_cap * np.sqrt(max(np.linalg.norm(gamma), 1e-300))
    best = np.inf

    for p in range(p_min, p_max + 1):
        if p == 0:
            r = float(np.linalg.norm(Qperp @ gamma))
            if r <= tol:
                xi0 = source.project(gamma)
                return DecompositionCertificate(gamma, xi0, np.zeros((0, n)), float(np.linalg.norm(gamma - xi0)))
            best = min(best, r)
            continue
        if source.dim == 0:
            break
        r, c = _search(sys, Q, Qperp, gamma, p, attempts, rng, cap)
        best = min(best, r)
        if r <= tol:
            xis = c.reshape(p, -1) @ Q
            xi0 = source.project(gamma + eval_f(sys, xis).sum(axis=0))
            cert = DecompositionCertificate(gamma, xi0, xis, 0.0)
            return DecompositionCertificate(gamma, xi0, xis, cert.recompute_residual(sys))
    return NotFound(gamma, float(best), p_max, attempts)


def trivial_certificate(v) -> DecompositionCertificate:
    v = np.asarray(v, dtype=np.float64)
    return DecompositionCertificate(v, v.copy(), np.zeros((0, v.size)), 0.0)


def grow_subspace(
    sys: QuadraticSystem,
    E: SubspaceBasis,
    p_max: int = DEFAULT_P_MAX,
    attempts: int = DEFAULT_ATTEMPTS,
    seed=0,
    cert_tol: float = DEFAULT_CERT_TOL,
    xi_cap: float = DEFAULT_XI_CAP,
    level: int = 1,
):
    """One certified growth step ``E -> E_hat``.

    Candidates are ``E`` followed by ``Gamma(a, b)`` over pairs of basis vectors
    (lexicographic order). A new orthonormal direction ``g`` is admitted only
    when both ``+g`` and ``-g`` are representable over ``E``, so the admitted
    span consists of representable vectors. Returns the basis and a map from
    basis index to the ``(plus, minus)`` certificate pair.
    """
    vecs = E.vectors
    cands = [polarize(sys, vecs[i], vecs[j]) for i in range(E.dim) for j in range(i, E.dim)]
    pool = orthonormalize(list(vecs) + cands, E.tol, E.ambient_dim)
    admitted = list(vecs)
    certs = {i: (trivial_certificate(v), trivial_certificate(-v)) for i, v in enumerate(vecs)}
    for idx, g in enumerate(pool.vectors[E.dim :]):
        pair = []
        for s, sign in enumerate((1.0, -1.0)):
            res = representable(
                sys, E, sign * g, p_max, attempts, [int(seed), level, idx, s], cert_tol, xi_cap
            )
            if isinstance(res, NotFound):
                break
            pair.append(res)
        if len(pair) == 2:
            certs[len(admitted)] = tuple(pair)
            admitted.append(g)
    return SubspaceBasis(E.ambient_dim, np.array(admitted).reshape(len(admitted), E.ambient_dim), E.tol), certs


@dataclass(eq=False)
class SaturationChain:
    levels: list
    certificates: list  # certificates[l]: {basis index of E_l: (plus, minus)} over E_{l-1}
    saturated: bool
    n_X: int | None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "levels": [
                {
                    "dim": E.dim,
                    "basis": E.to_list(),
                    "certificates": {
                        str(i): {"plus": c[0].to_dict(), "minus": c[1].to_dict()}
                        for i, c in sorted(self.certificates[l].items())
                    },
                }
                for l, E in enumerate(self.levels)
            ],
            "saturated": self.saturated,
            "n_X": self.n_X,
            "params": self.params,
        }


def saturation_chain(
    sys: QuadraticSystem,
    max_depth: int = 4,
    p_max: int = DEFAULT_P_MAX,
    attempts: int = DEFAULT_ATTEMPTS,
    seed=0,
    cert_tol: float = DEFAULT_CERT_TOL,
    xi_cap: float = DEFAULT_XI_CAP,
) -> SaturationChain:
    """Iterate :func:`grow_subspace` from ``Range(B)`` until full, stalled, or ``max_depth``."""
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    E = column_space(sys.B)
    levels, certs = [E], [{i: (trivial_certificate(v), trivial_certificate(-v)) for i, v in enumerate(E.vectors)}]
    params = {"max_depth": max_depth, "p_max": p_max, "attempts": attempts, "seed": int(seed),
              "cert_tol": cert_tol, "xi_cap": xi_cap}
    for level in range(1, max_depth + 1):
        if E.dim == sys.n_x:
            break
        E_new, c = grow_subspace(sys, E, p_max, attempts, seed, cert_tol, xi_cap, level)
        if E_new.dim == E.dim:
            break
        levels.append(E_new)
        certs.append(c)
        E = E_new
    full = levels[-1].dim == sys.n_x
    return SaturationChain(levels, certs, full, len(levels) - 1 if full else None, params)


@dataclass(eq=False)
class Assumption1Report:
    success: bool
    certificates: list  # per direction: dict with u, xi (control coordinates) and residual
    failures: list  # per failing direction: NotFound

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "certificates": self.certificates,
            "failures": [f.to_dict() for f in self.failures],
        }


def check_assumption1(
    sys: QuadraticSystem,
    directions=None,
    attempts: int = DEFAULT_ATTEMPTS,
    seed=0,
    cert_tol: float = DEFAULT_CERT_TOL,
    xi_cap: float = DEFAULT_XI_CAP,
) -> Assumption1Report:
    """Look for ``(u, xi)`` with ``gamma = B u - f(B xi)`` for each direction.

    ``directions`` defaults to the canonical basis of the state space.
    """
    if directions is None:
        directions = np.eye(sys.n_x)
    E0 = column_space(sys.B)
    found, failed = [], []
    for k, g in enumerate(np.atleast_2d(np.asarray(directions, dtype=np.float64))):
        res = representable(sys, E0, g, 1, attempts, [int(seed), k], cert_tol, xi_cap, p_min=1)
        if isinstance(res, NotFound):
            failed.append(res)
            continue
        u = np.linalg.lstsq(sys.B, res.xi0, rcond=None)[0]
        xi = np.linalg.lstsq(sys.B, res.xis[0], rcond=None)[0]
        found.append({"gamma": g.tolist(), "u": u.tolist(), "xi": xi.tolist(), "residual": res.residual})
    return Assumption1Report(not failed, found, failed)
