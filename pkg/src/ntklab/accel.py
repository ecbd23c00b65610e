"""Numba-accelerated hot loops with pure-numpy fallbacks.

Two paths are worth compiling: the entrywise Hermite-series accumulation for
expected kernel matrices (n^2 * K scalar work) and the damped fixed-point
iteration behind the deformed semicircle law (iterations * atoms, called per
grid point). Everything BLAS-shaped stays in numpy.

Set NTKLAB_NO_NUMBA=1 to force the numpy implementations; `backend_name()`
reports which path is live. Both paths compute the same quantities (the
benchmark in benchmarks/bench_backends.py checks agreement and timing).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba as _nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("NTKLAB_NO_NUMBA", "") not in ("1", "true", "yes")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Hermite-series kernel accumulation
#
# out[i, j] = sum_k Crow[k, i] * Ccol[k, j] * G[i, j]**k
# ---------------------------------------------------------------------------


def _series_symmetric_np(G, C):
    out = np.zeros_like(G)
    P = np.ones_like(G)
    for k in range(C.shape[0]):
        out += np.outer(C[k], C[k]) * P
        P *= G
    return out


def _series_cross_np(G, Crow, Ccol):
    out = np.zeros_like(G)
    P = np.ones_like(G)
    for k in range(Crow.shape[0]):
        out += np.outer(Crow[k], Ccol[k]) * P
        P *= G
    return out


def _series_symmetric_loop(G, C):  # pragma: no cover - compiled path
    n = G.shape[0]
    K = C.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            g = G[i, j]
            p = 1.0
            s = 0.0
            for k in range(K):
                s += C[k, i] * C[k, j] * p
                p *= g
            out[i, j] = s
            out[j, i] = s
    return out


def _series_cross_loop(G, Crow, Ccol):  # pragma: no cover - compiled path
    m = G.shape[0]
    n = G.shape[1]
    K = Crow.shape[0]
    out = np.empty((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            g = G[i, j]
            p = 1.0
            s = 0.0
            for k in range(K):
                s += Crow[k, i] * Ccol[k, j] * p
                p *= g
            out[i, j] = s
    return out


# ---------------------------------------------------------------------------
# Damped fixed-point iteration for the self-consistent pair (beta, m)
#
# beta solves   beta + sum_a w_a x_a / (z + beta x_a) = 0   on C+,
# m follows as  m = -sum_a w_a / (z + beta x_a).
# Update beta <- beta - damping * residual, clamping Im(beta) above 0.
# ---------------------------------------------------------------------------

_IM_FLOOR = 1e-16


def _fixed_point_py(xs, ws, z, beta0, damping, tol, max_iter):
    beta = beta0
    res = np.inf
    it = 0
    for it in range(1, int(max_iter) + 1):
        t = np.sum(ws * xs / (z + beta * xs))
        r = beta + t
        res = abs(r)
        if res <= tol:
            break
        beta = beta - damping * r
        if beta.imag <= 0.0:
            beta = complex(beta.real, _IM_FLOOR)
    m = -np.sum(ws / (z + beta * xs))
    return beta, m, res, it


def _fixed_point_loop(xs, ws, z, beta0, damping, tol, max_iter):  # pragma: no cover
    beta = beta0
    res = 1e300
    it = 0
    n = xs.shape[0]
    for it in range(1, max_iter + 1):
        t = 0.0 + 0.0j
        for a in range(n):
            t += ws[a] * xs[a] / (z + beta * xs[a])
        r = beta + t
        res = abs(r)
        if res <= tol:
            break
        beta = beta - damping * r
        if beta.imag <= 0.0:
            beta = complex(beta.real, _IM_FLOOR)
    m = 0.0 + 0.0j
    for a in range(n):
        m -= ws[a] / (z + beta * xs[a])
    return beta, m, res, it


if USE_NUMBA:
    _jit = _nb.njit(cache=True, nogil=True)
    series_symmetric = _jit(_series_symmetric_loop)
    series_cross = _jit(_series_cross_loop)
    fixed_point_step = _jit(_fixed_point_loop)
else:
    series_symmetric = _series_symmetric_np
    series_cross = _series_cross_np
    fixed_point_step = _fixed_point_py
