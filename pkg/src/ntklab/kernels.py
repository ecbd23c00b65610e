"""Empirical and expected kernel matrices of a two-layer random network.

For a fixed d0 x n input X, first-layer weights W (d1 x d0, iid N(0,1)) and
output weights a (d1, iid N(0,1)), with Y = sigma(WX):

    ck   = Y^T Y / d1                         (conjugate kernel)
    grad = (S^T S) .* (X^T X) / d1,  S = sigma'(WX) * a[:, None]
    ntk  = ck + grad                          (neural tangent kernel)

Expectations over a single row w ~ N(0, Id) have entrywise Hermite series

    Phi[a,b] = sum_k zeta_k(sigma_a) zeta_k(sigma_b) <u_a, u_b>^k
    Psi[a,b] = sum_k zeta_k(sigma'_a) zeta_k(sigma'_b) <u_a, u_b>^k <x_a, x_b>

with sigma_a(x) = sigma(|x_a| x) and u_a = x_a / |x_a|; the truncation tail
is folded into the diagonal, whose exact value E[sigma(|x_a| xi)^2] is known.
Monte Carlo estimators of the same expectations serve as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .activation import (
    Activation,
    DEFAULT_ORDER,
    deriv_second_moment,
    deriv_zeta_table,
    hermite_data,
    second_moment,
    zeta_table,
)
from .datagen import DataMatrix
from .util import DEFAULT_BUDGET, STREAM_MC_KERNEL, STREAM_WEIGHTS, block_ranges, rng_stream


def _as_matrix(X) -> np.ndarray:
    M = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("input must be a nonempty d0 x n matrix")
    return M


@dataclass
class WeightDraw:
    """First-layer weights and output weights for one network realization."""

    W: np.ndarray
    a: np.ndarray
    seed: int | None = None

    @property
    def d1(self) -> int:
        return self.W.shape[0]


def draw_weights(d0: int, d1: int, seed: int = 0) -> WeightDraw:
    """iid N(0,1) output weights then first-layer rows, one stream."""
    if d0 <= 0 or d1 <= 0:
        raise ValueError("d0 and d1 must be positive")
    rng = rng_stream(seed, STREAM_WEIGHTS)
    a = rng.standard_normal(d1)
    W = rng.standard_normal((d1, d0))
    return WeightDraw(W=W, a=a, seed=seed)


@dataclass
class KernelMatrices:
    """Symmetric empirical kernels; grad and ntk are None when not built."""

    ck: np.ndarray
    grad: np.ndarray | None
    ntk: np.ndarray | None
    d1: int


def build_empirical(X, act: Activation, d1: int, seed: int = 0,
                    weights: WeightDraw | None = None, include_ntk: bool = True,
                    budget: int = DEFAULT_BUDGET) -> KernelMatrices:
    """Empirical kernels, accumulated over a fixed row-block partition.

    When d1 * n exceeds the entry budget the feature matrix is never
    materialized: weights are drawn block by block in stream order (the same
    numbers as a single full draw) and Y^T Y / S^T S accumulate per block.
    Results agree across budgets up to accumulation roundoff; for a fixed
    budget they are bit-reproducible.
    """
    M = _as_matrix(X)
    d0, n = M.shape
    if d1 <= 0:
        raise ValueError("d1 must be positive")
    gram = M.T @ M if include_ntk else None

    yy = np.zeros((n, n))
    ss = np.zeros((n, n)) if include_ntk else None
    block = d1 if d1 * n <= budget else max(1, int(budget // max(n, 1)))

    if weights is not None:
        if weights.W.shape != (d1, d0):
            raise ValueError("weights shape does not match (d1, d0)")
        for lo, hi in block_ranges(d1, block):
            wb = weights.W[lo:hi]
            pre = wb @ M
            yb = act(pre)
            yy += yb.T @ yb
            if include_ntk:
                sb = act.prime(pre) * weights.a[lo:hi, None]
                ss += sb.T @ sb
    else:
        rng = rng_stream(seed, STREAM_WEIGHTS)
        a = rng.standard_normal(d1)
        for lo, hi in block_ranges(d1, block):
            wb = rng.standard_normal((hi - lo, d0))
            pre = wb @ M
            yb = act(pre)
            yy += yb.T @ yb
            if include_ntk:
                sb = act.prime(pre) * a[lo:hi, None]
                ss += sb.T @ sb

    ck = yy / d1
    ck = (ck + ck.T) / 2.0
    grad = ntk = None
    if include_ntk:
        grad = (ss / d1) * gram
        grad = (grad + grad.T) / 2.0
        ntk = ck + grad
    return KernelMatrices(ck=ck, grad=grad, ntk=ntk, d1=d1)


def empirical_kernel_block(weights: WeightDraw, act: Activation, A, B,
                           mode: str = "ck", budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Rectangular empirical kernel block K(A, B) for a fixed weight draw.

    mode: "ck", "ntk-grad" or "ntk-full". Feature evaluations are chunked
    over columns so d1 x columns never exceeds the entry budget.
    """
    Ma, Mb = _as_matrix(A), _as_matrix(B)
    d1 = weights.d1
    out = np.zeros((Ma.shape[1], Mb.shape[1]))
    col_block = max(1, int(budget // max(d1, 1)))

    def feature_chunks(M):
        for lo, hi in block_ranges(M.shape[1], col_block):
            yield lo, hi, weights.W @ M[:, lo:hi]

    # accumulate per (A-chunk, B-chunk); B chunks recomputed per A chunk to
    # keep memory bounded, dominated by the matmuls anyway
    for lo_a, hi_a, pre_a in feature_chunks(Ma):
        ya = act(pre_a)
        sa = act.prime(pre_a) * weights.a[:, None] if mode != "ck" else None
        for lo_b, hi_b, pre_b in feature_chunks(Mb):
            if mode in ("ck", "ntk-full"):
                out[lo_a:hi_a, lo_b:hi_b] += ya.T @ act(pre_b)
            if mode in ("ntk-grad", "ntk-full"):
                sb = act.prime(pre_b) * weights.a[:, None]
                cross = Ma[:, lo_a:hi_a].T @ Mb[:, lo_b:hi_b]
                out[lo_a:hi_a, lo_b:hi_b] += (sa.T @ sb) * cross
    return out / d1


# ---------------------------------------------------------------------------
# expected kernels
# ---------------------------------------------------------------------------


def _norms_and_unit_gram(M: np.ndarray):
    t = np.linalg.norm(M, axis=0)
    if np.any(t <= 0):
        raise ValueError("expected kernels require nonzero columns")
    G = (M.T @ M) / np.outer(t, t)
    np.fill_diagonal(G, 1.0)
    return t, G


def _coef_columns(table_fn, act, t, order):
    """Per-column coefficient table, deduplicated over repeated norms."""
    tu, inv = np.unique(np.round(t, 12), return_inverse=True)
    return np.ascontiguousarray(table_fn(act, tu, order)[:, inv])


def expected_phi(X, act: Activation, method: str = "hermite-series",
                 order: int = DEFAULT_ORDER, mc_samples: int = 200_000, seed: int = 0,
                 return_stderr: bool = False, budget: int = DEFAULT_BUDGET):
    """E[sigma(w^T x_a) sigma(w^T x_b)] over w ~ N(0, Id)."""
    M = _as_matrix(X)
    if method == "hermite-series":
        if return_stderr:
            raise ValueError("stderr is only available from the monte-carlo method")
        t, G = _norms_and_unit_gram(M)
        C = _coef_columns(zeta_table, act, t, order)
        phi = accel.series_symmetric(G, C)
        tail = second_moment(act, t) - np.sum(C * C, axis=0)
        phi[np.diag_indices_from(phi)] += tail
        return (phi + phi.T) / 2.0
    if method == "monte-carlo":
        return _mc_expectation(M, act, act, mc_samples, seed, return_stderr, budget,
                               times_gram=False)
    raise ValueError(f"unknown method {method!r}")


def expected_psi(X, act: Activation, method: str = "monte-carlo",
                 order: int = DEFAULT_ORDER, mc_samples: int = 200_000, seed: int = 0,
                 return_stderr: bool = False, budget: int = DEFAULT_BUDGET):
    """E[sigma'(w^T x_a) sigma'(w^T x_b)] <x_a, x_b>, the grad-part mean."""
    M = _as_matrix(X)
    if method == "hermite-series":
        if return_stderr:
            raise ValueError("stderr is only available from the monte-carlo method")
        t, G = _norms_and_unit_gram(M)
        C = _coef_columns(deriv_zeta_table, act, t, order)
        fac = accel.series_symmetric(G, C)
        tail = deriv_second_moment(act, t) - np.sum(C * C, axis=0)
        fac[np.diag_indices_from(fac)] += tail
        psi = fac * (M.T @ M)
        return (psi + psi.T) / 2.0
    if method == "monte-carlo":
        return _mc_expectation(M, act, None, mc_samples, seed, return_stderr, budget,
                               times_gram=True)
    raise ValueError(f"unknown method {method!r}")


def _mc_expectation(M, act, _unused, samples, seed, return_stderr, budget, times_gram):
    n = M.shape[1]
    rng = rng_stream(seed, STREAM_MC_KERNEL)
    s1 = np.zeros((n, n))
    s2 = np.zeros((n, n)) if return_stderr else None
    block = samples if samples * n <= budget else max(1, int(budget // max(n, 1)))
    done = 0
    while done < samples:
        b = min(block, samples - done)
        pre = rng.standard_normal((b, M.shape[0])) @ M
        z = act.prime(pre) if times_gram else act(pre)
        s1 += z.T @ z
        if return_stderr:
            zsq = z * z
            s2 += zsq.T @ zsq
        done += b
    mean = s1 / samples
    if times_gram:
        mean = mean * (M.T @ M)
    mean = (mean + mean.T) / 2.0
    if not return_stderr:
        return mean
    fac = (M.T @ M) if times_gram else 1.0
    var = s2 / samples - (s1 / samples) ** 2
    stderr = np.sqrt(np.clip(var, 0.0, None) / samples) * np.abs(fac)
    return mean, stderr


def expected_cross(A, B, act: Activation, mode: str = "ck",
                   order: int = DEFAULT_ORDER) -> np.ndarray:
    """Rectangular expected kernel block between column sets A and B."""
    Ma, Mb = _as_matrix(A), _as_matrix(B)
    ta = np.linalg.norm(Ma, axis=0)
    tb = np.linalg.norm(Mb, axis=0)
    if np.any(ta <= 0) or np.any(tb <= 0):
        raise ValueError("expected kernels require nonzero columns")
    cross = Ma.T @ Mb
    G = cross / np.outer(ta, tb)
    np.clip(G, -1.0, 1.0, out=G)
    out = np.zeros_like(G)
    if mode in ("ck", "ntk-full"):
        Ca = _coef_columns(zeta_table, act, ta, order)
        Cb = _coef_columns(zeta_table, act, tb, order)
        out += accel.series_cross(G, Ca, Cb)
    if mode in ("ntk-grad", "ntk-full"):
        Da = _coef_columns(deriv_zeta_table, act, ta, order)
        Db = _coef_columns(deriv_zeta_table, act, tb, order)
        out += accel.series_cross(G, Da, Db) * cross
    if mode not in ("ck", "ntk-grad", "ntk-full"):
        raise ValueError(f"unknown mode {mode!r}")
    return out


# ---------------------------------------------------------------------------
# deterministic equivalents
# ---------------------------------------------------------------------------


def mu_vector(X, act: Activation) -> np.ndarray:
    """Entry sqrt(2) zeta_2 (|x_a| - 1): first-order mean of sigma(|x_a| xi)."""
    M = _as_matrix(X)
    h = hermite_data(act)
    t = np.linalg.norm(M, axis=0)
    return math.sqrt(2.0) * h.zeta[2] * (t - 1.0)


def phi0(X, act: Activation) -> np.ndarray:
    """Deterministic equivalent of the expected conjugate kernel.

    mu mu^T + sum_{k=1..3} zeta_k^2 (X^T X)^{.k} + (1 - zeta_1^2 - zeta_2^2
    - zeta_3^2) Id, valid for nearly unit-norm, nearly orthogonal columns.
    """
    M = _as_matrix(X)
    h = hermite_data(act)
    G = M.T @ M
    mu = mu_vector(M, act)
    out = np.outer(mu, mu)
    P = G.copy()
    for k in (1, 2, 3):
        out += h.zeta[k] ** 2 * P
        if k < 3:
            P = P * G
    out += h.floor_ck * np.eye(M.shape[1])
    return (out + out.T) / 2.0


def psi0(X, act: Activation) -> np.ndarray:
    """Deterministic equivalent of the grad-part mean.

    (a_sigma - eta_0^2 - eta_1^2 - eta_2^2) Id + sum_{k=0..2} eta_k^2
    (X^T X)^{.(k+1)}.
    """
    M = _as_matrix(X)
    h = hermite_data(act)
    G = M.T @ M
    out = h.floor_ntk * np.eye(M.shape[1])
    P = G.copy()
    for k in (0, 1, 2):
        out += h.eta[k] ** 2 * P
        if k < 2:
            P = P * G
    return (out + out.T) / 2.0


def linear_equivalents(X, act: Activation):
    """Spectrally equivalent linear kernels (ck_lin, ntk_lin).

    ck_lin = b^2 X^T X + (1 - b^2) Id; the ntk adds b^2 X^T X +
    (a_sigma - b^2) Id for the grad part.
    """
    M = _as_matrix(X)
    h = hermite_data(act)
    G = M.T @ M
    n = M.shape[1]
    b2 = h.b_sigma**2
    ck_lin = b2 * G + (1.0 - b2) * np.eye(n)
    ntk_lin = ck_lin + b2 * G + (h.a_sigma - b2) * np.eye(n)
    return ck_lin, ntk_lin


def deterministic_equivalents(X, act: Activation, include_psi: bool = True):
    """Convenience bundle (phi0, psi0) used by the spectral centering modes."""
    return phi0(X, act), (psi0(X, act) if include_psi else None)
