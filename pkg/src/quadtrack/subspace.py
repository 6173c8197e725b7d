"""Orthonormal bases of small dense subspaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    ambient_dim: int
    vectors: np.ndarray  # (k, ambient_dim), orthonormal rows
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as columns, shape ``(ambient_dim, dim)``."""
        return self.vectors.T

    def project(self, v):
        Q = self.vectors
        return (np.asarray(v, dtype=np.float64) @ Q.T) @ Q

    def complement(self) -> "SubspaceBasis":
        """Orthonormal basis of the orthogonal complement."""
        eye = np.eye(self.ambient_dim)
        return orthonormalize(list(self.vectors) + list(eye), self.tol, self.ambient_dim).drop(self.dim)

    def drop(self, k: int) -> "SubspaceBasis":
        return SubspaceBasis(self.ambient_dim, self.vectors[k:].copy(), self.tol)

    def to_list(self):
        return self.vectors.tolist()


def orthonormalize(vectors, tol=DEFAULT_TOL, ambient_dim=None) -> SubspaceBasis:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual after projection falls below ``tol`` (relative to
    their own norm when that exceeds one) are dropped.
    """
    vecs = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if ambient_dim is None:
        if not vecs:
            raise ValueError("ambient dimension needed for an empty vector list")
        ambient_dim = vecs[0].size
    if ambient_dim < 1:
        raise ValueError("ambient dimension must be positive")
    basis = []
    for v in vecs:
        if v.size != ambient_dim:
            raise ValueError(f"vector of length {v.size} in ambient dimension {ambient_dim}")
        scale = max(1.0, float(np.linalg.norm(v)))
        r = v.copy()
        for _ in range(2):
            for q in basis:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr < tol * scale or len(basis) == ambient_dim:
            continue
        basis.append(r / nr)
    arr = np.array(basis).reshape(len(basis), ambient_dim)
    return SubspaceBasis(ambient_dim, arr, tol)


def distance(basis: SubspaceBasis, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (basis.ambient_dim,):
        raise ValueError(f"vector shape {v.shape} does not match ambient dim {basis.ambient_dim}")
    return float(np.linalg.norm(v - basis.project(v)))


def contains(basis: SubspaceBasis, v) -> bool:
    v = np.asarray(v, dtype=np.float64)
    return distance(basis, v) <= basis.tol * (1.0 + np.linalg.norm(v))


def span_union(b1: SubspaceBasis, b2: SubspaceBasis) -> SubspaceBasis:
    if b1.ambient_dim != b2.ambient_dim:
        raise ValueError("ambient dimensions differ")
    return orthonormalize(list(b1.vectors) + list(b2.vectors), min(b1.tol, b2.tol), b1.ambient_dim)


def column_space(M, tol=DEFAULT_TOL) -> SubspaceBasis:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    return orthonormalize(list(M.T), tol, M.shape[0])
