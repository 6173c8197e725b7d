"""Compiled fixed-step RK4 loops. Inputs are stage arrays of shape (N, 3, d)."""

import numba
import numpy as np


@numba.njit(cache=True)
def _quad(G, y, out):
    n = y.shape[0]
    for k in range(n):
        acc = 0.0
        for i in range(n):
            yi = y[i]
            if yi == 0.0:
                continue
            row = 0.0
            for j in range(n):
                row += G[k, i, j] * y[j]
            acc += yi * row
        out[k] = acc


@numba.njit(cache=True)
def _rhs_ext(A, G, w, z, g, tmp, out):
    n = w.shape[0]
    for i in range(n):
        tmp[i] = w[i] + z[i]
    _quad(G, tmp, out)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * tmp[j]
        out[i] = -acc - out[i] + g[i]


@numba.njit(cache=True)
def rk4_extended(A, G, w0, zeta, gamma, h, threshold):
    """Integrate w' = -A(w + zeta) - f(w + zeta) + gamma.

    Returns (trajectory, blow_index); blow_index is -1 when no stage norm
    exceeded ``threshold``, else the step at which it happened.
    """
    N = zeta.shape[0]
    n = w0.shape[0]
    out = np.zeros((N + 1, n))
    out[0] = w0
    w = w0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    y = np.empty(n)
    thr2 = threshold * threshold
    for s in range(N):
        _rhs_ext(A, G, w, zeta[s, 0], gamma[s, 0], tmp, k1)
        for i in range(n):
            y[i] = w[i] + 0.5 * h * k1[i]
        _rhs_ext(A, G, y, zeta[s, 1], gamma[s, 1], tmp, k2)
        for i in range(n):
            y[i] = w[i] + 0.5 * h * k2[i]
        _rhs_ext(A, G, y, zeta[s, 1], gamma[s, 1], tmp, k3)
        for i in range(n):
            y[i] = w[i] + h * k3[i]
        _rhs_ext(A, G, y, zeta[s, 2], gamma[s, 2], tmp, k4)
        nrm = 0.0
        for i in range(n):
            w[i] = w[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            nrm += w[i] * w[i]
        if not (nrm <= thr2):
            return out[: s + 1], s
        out[s + 1] = w
    return out, -1


@numba.njit(cache=True)
def _rhs_coupled(A, G, Gt, M, P, x, z, g, tmpx, dx, dz):
    nx = x.shape[0]
    nz = z.shape[0]
    _quad(G, x, dx)
    for i in range(nx):
        acc = 0.0
        for j in range(nx):
            acc += A[i, j] * x[j]
        dx[i] = -acc - dx[i] + g[i]
    for a in range(nz):
        acc = 0.0
        for i in range(nz):
            zi = z[i]
            for j in range(nx):
                acc += Gt[a, i, j] * zi * x[j]
        lin = 0.0
        for i in range(nz):
            lin += M[a, i] * z[i]
        za = z[a]
        poly = P[0, a] + za * (P[1, a] + za * (P[2, a] + za * P[3, a]))
        dz[a] = -acc - lin - poly


@numba.njit(cache=True)
def rk4_coupled(A, G, Gt, M, P, x0, z0, gamma, h, threshold):
    """x' = -Ax - f(x) + gamma,  z' = -Gt(z, x) - M z - poly(z)."""
    N = gamma.shape[0]
    nx = x0.shape[0]
    nz = z0.shape[0]
    X = np.zeros((N + 1, nx))
    Z = np.zeros((N + 1, nz))
    X[0] = x0
    Z[0] = z0
    x = x0.copy()
    z = z0.copy()
    kx = np.empty((4, nx))
    kz = np.empty((4, nz))
    yx = np.empty(nx)
    yz = np.empty(nz)
    tmp = np.empty(nx)
    thr2 = threshold * threshold
    coef = (0.0, 0.5, 0.5, 1.0)
    stage = (0, 1, 1, 2)
    for s in range(N):
        for r in range(4):
            if r == 0:
                for i in range(nx):
                    yx[i] = x[i]
                for i in range(nz):
                    yz[i] = z[i]
            else:
                c = coef[r] * h
                for i in range(nx):
                    yx[i] = x[i] + c * kx[r - 1, i]
                for i in range(nz):
                    yz[i] = z[i] + c * kz[r - 1, i]
            _rhs_coupled(A, G, Gt, M, P, yx, yz, gamma[s, stage[r]], tmp, kx[r], kz[r])
        nrm = 0.0
        for i in range(nx):
            x[i] = x[i] + h / 6.0 * (kx[0, i] + 2.0 * kx[1, i] + 2.0 * kx[2, i] + kx[3, i])
            nrm += x[i] * x[i]
        for i in range(nz):
            z[i] = z[i] + h / 6.0 * (kz[0, i] + 2.0 * kz[1, i] + 2.0 * kz[2, i] + kz[3, i])
            nrm += z[i] * z[i]
        if not (nrm <= thr2):
            return X[: s + 1], Z[: s + 1], s
        X[s + 1] = x
        Z[s + 1] = z
    return X, Z, -1


@numba.njit(cache=True)
def rk4_linear(A, z0, forcing, h):
    """z' = A z + forcing(t); forcing given at stage times."""
    N = forcing.shape[0]
    n = z0.shape[0]
    out = np.zeros((N + 1, n))
    out[0] = z0
    z = z0.copy()
    k = np.empty((4, n))
    y = np.empty(n)
    coef = (0.0, 0.5, 0.5, 1.0)
    stage = (0, 1, 1, 2)
    for s in range(N):
        for r in range(4):
            c = coef[r] * h
            for i in range(n):
                y[i] = z[i] + (c * k[r - 1, i] if r > 0 else 0.0)
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * y[j]
                k[r, i] = acc + forcing[s, stage[r], i]
        for i in range(n):
            z[i] = z[i] + h / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
        out[s + 1] = z
    return out


@numba.njit(cache=True)
def _rhs_driven(Gt, M, P, z, x, out):
    nz = z.shape[0]
    nx = x.shape[0]
    for a in range(nz):
        acc = 0.0
        for i in range(nz):
            zi = z[i]
            for j in range(nx):
                acc += Gt[a, i, j] * zi * x[j]
        lin = 0.0
        for i in range(nz):
            lin += M[a, i] * z[i]
        za = z[a]
        poly = P[0, a] + za * (P[1, a] + za * (P[2, a] + za * P[3, a]))
        out[a] = -acc - lin - poly


@numba.njit(cache=True)
def rk4_driven(Gt, M, P, z0, X, h, threshold):
    """z' = -Gt(z, x(t)) - M z - poly(z) with x given at stage times."""
    N = X.shape[0]
    nz = z0.shape[0]
    out = np.zeros((N + 1, nz))
    out[0] = z0
    z = z0.copy()
    k = np.empty((4, nz))
    y = np.empty(nz)
    coef = (0.0, 0.5, 0.5, 1.0)
    stage = (0, 1, 1, 2)
    thr2 = threshold * threshold
    for s in range(N):
        for r in range(4):
            c = coef[r] * h
            for i in range(nz):
                y[i] = z[i] + (c * k[r - 1, i] if r > 0 else 0.0)
            _rhs_driven(Gt, M, P, y, X[s, stage[r]], k[r])
        nrm = 0.0
        for i in range(nz):
            z[i] = z[i] + h / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
            nrm += z[i] * z[i]
        if not (nrm <= thr2):
            return out[: s + 1], s
        out[s + 1] = z
    return out, -1
