"""Normalized activations and their Gaussian-Hermite moment data.

Activations enter every kernel formula only through Gaussian moments: the
coefficients zeta_k = E[sigma(xi) h_k(xi)] of the orthonormal Hermite
expansion, the derivative coefficients eta_k = E[sigma'(xi) h_k(xi)], and
the scalars b_sigma = zeta_1 = E[sigma'(xi)], a_sigma = E[sigma'(xi)^2]
(xi standard normal). All activations are used in normalized form,
E[sigma(xi)] = 0 and E[sigma(xi)^2] = 1.

Smooth activations get their moments from a fixed 200-node Gauss-Hermite
rule, which is spectrally accurate for them. Piecewise-linear activations
(slope a above 0, slope c at and below 0, intercept b) use exact
half-Gaussian closed forms instead: quadrature of a step discontinuity
cannot reach the 1e-8 identities the moment data must satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, roots_hermite

MAX_HERMITE_ORDER = 60
DEFAULT_ORDER = 40
QUAD_NODES = 200

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)  # standard normal density at 0


def hermite_poly(r: int, x):
    """Orthonormal probabilists' Hermite polynomial h_r evaluated entrywise.

    h_0 = 1, h_1 = x, h_r = (x h_{r-1} - sqrt(r-1) h_{r-2}) / sqrt(r), so
    E[h_j(xi) h_k(xi)] = delta_jk for xi ~ N(0, 1).
    """
    r = int(r)
    if r < 0 or r > MAX_HERMITE_ORDER:
        raise ValueError(f"hermite order must be in [0, {MAX_HERMITE_ORDER}], got {r}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if r == 0:
        return h_prev
    h = x.copy()
    for k in range(2, r + 1):
        h_prev, h = h, (x * h - math.sqrt(k - 1) * h_prev) / math.sqrt(k)
    return h


_quad_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_hermite_table_cache: dict[tuple[int, int], np.ndarray] = {}


def gauss_hermite_nodes(n: int = QUAD_NODES):
    """Nodes/weights (x, w) with sum_q w_q f(x_q) ~ E[f(xi)], xi ~ N(0,1)."""
    if n not in _quad_cache:
        t, w = roots_hermite(n)
        _quad_cache[n] = (math.sqrt(2.0) * t, w / math.sqrt(math.pi))
    return _quad_cache[n]


def _hermite_table(order: int, n_nodes: int = QUAD_NODES) -> np.ndarray:
    """Rows h_0..h_order evaluated at the quadrature nodes."""
    key = (order, n_nodes)
    if key not in _hermite_table_cache:
        x, _ = gauss_hermite_nodes(n_nodes)
        tab = np.empty((order + 1, x.size))
        tab[0] = 1.0
        if order >= 1:
            tab[1] = x
        for k in range(2, order + 1):
            tab[k] = (x * tab[k - 1] - math.sqrt(k - 1) * tab[k - 2]) / math.sqrt(k)
        _hermite_table_cache[key] = tab
    return _hermite_table_cache[key]


@dataclass
class Activation:
    """Normalized scalar activation with an analytic derivative.

    `fn`/`deriv` operate on the raw (unnormalized) function; calling the
    object applies (fn(x) - shift) / scale and `prime` returns the
    derivative of that. kind is "smooth" or "piecewise"; piecewise carries
    slopes (a above zero, c at/below zero) and intercept b of the raw map.
    """

    name: str
    kind: str
    shift: float
    scale: float
    lipschitz: float
    fn: object = field(repr=False, default=None)
    deriv: object = field(repr=False, default=None)
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "piecewise":
            raw = np.where(x > 0, self.a * x, self.c * x) + self.b
        else:
            raw = self.fn(x)
        return (raw - self.shift) / self.scale

    def prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "piecewise":
            raw = np.where(x > 0, self.a, self.c)
            return raw / self.scale + np.zeros_like(x)
        return self.deriv(x) / self.scale

    @property
    def is_linear(self) -> bool:
        if self.kind == "piecewise":
            return self.a == self.c
        return self.name == "identity"


@dataclass
class HermiteData:
    """Hermite moment table of a normalized activation up to a fixed order."""

    zeta: np.ndarray
    eta: np.ndarray
    b_sigma: float
    a_sigma: float
    order: int
    tail_mass: float

    @property
    def floor_ck(self) -> float:
        return 1.0 - self.zeta[1] ** 2 - self.zeta[2] ** 2 - self.zeta[3] ** 2

    @property
    def floor_ntk(self) -> float:
        return self.a_sigma - self.eta[0] ** 2 - self.eta[1] ** 2 - self.eta[2] ** 2


_SMOOTH_BASES = {
    "identity": (lambda x: x, lambda x: np.ones_like(x), 1.0),
    "arctan": (np.arctan, lambda x: 1.0 / (1.0 + x * x), 1.0),
    "cos": (np.cos, lambda x: -np.sin(x), 1.0),
    "sigmoid": (expit, lambda x: expit(x) * (1.0 - expit(x)), 0.25),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2, 1.0),
}


def normalize(name: str, a: float = 1.0, b: float = 0.0, c: float = 0.0) -> Activation:
    """Center and rescale a base activation to mean 0, variance 1 under N(0,1).

    For "piecewise" the raw map is a*x + b above zero and c*x + b at/below
    zero, with shift/scale in closed form; smooth builtins use quadrature.
    A degenerate (a.s. constant) base is rejected.
    """
    if name == "relu":
        name, a, b, c = "piecewise", 1.0, 0.0, 0.0
    if name == "piecewise":
        a, b, c = float(a), float(b), float(c)
        shift = (a - c) * PHI0 + b
        second = 0.5 * (a * a + c * c) + b * b + 2.0 * b * (a - c) * PHI0
        var = second - shift * shift
        if var <= 1e-24:
            raise ValueError("piecewise activation is degenerate (zero variance)")
        scale = math.sqrt(var)
        return Activation(name="piecewise", kind="piecewise", shift=shift, scale=scale,
                          lipschitz=max(abs(a), abs(c)) / scale, a=a, b=b, c=c)
    if name not in _SMOOTH_BASES:
        raise ValueError(f"unknown activation {name!r}")
    fn, deriv, sup_deriv = _SMOOTH_BASES[name]
    x, w = gauss_hermite_nodes()
    vals = fn(x)
    shift = float(np.sum(w * vals))
    var = float(np.sum(w * (vals - shift) ** 2))
    if var <= 1e-24:
        raise ValueError(f"activation {name!r} is degenerate (zero variance)")
    scale = math.sqrt(var)
    return Activation(name=name, kind="smooth", shift=shift, scale=scale,
                      lipschitz=sup_deriv / scale, fn=fn, deriv=deriv)


BUILTIN_NAMES = ("relu", "arctan", "cos", "sigmoid", "tanh", "identity", "piecewise")


# ---------------------------------------------------------------------------
# closed-form half-Gaussian moments for the piecewise family
# ---------------------------------------------------------------------------


def _he_at_zero(order: int) -> np.ndarray:
    """He_m(0) for m = 0..order (unnormalized probabilists' Hermite)."""
    v = np.zeros(order + 1)
    v[0] = 1.0
    for m in range(2, order + 1):
        v[m] = -(m - 1) * v[m - 2]
    return v


def _half_gaussian_tables(order: int):
    """M_k = E[1_{xi>0} h_k(xi)] and N_k = E[xi 1_{xi>0} h_k(xi)], k <= order."""
    he0 = _he_at_zero(order + 2)
    M = np.zeros(order + 2)
    M[0] = 0.5
    fact = 1.0
    for k in range(1, order + 2):
        fact *= k
        M[k] = PHI0 * he0[k - 1] / math.sqrt(fact)
    N = np.zeros(order + 1)
    for k in range(order + 1):
        N[k] = math.sqrt(k + 1) * M[k + 1] + (math.sqrt(k) * M[k - 1] if k >= 1 else 0.0)
    return M[: order + 1], N


def _piecewise_zeta_scaled(act: Activation, norms: np.ndarray, order: int) -> np.ndarray:
    """Columns zeta_k(x -> act(t x)) for each t in norms, exactly."""
    M, N = _half_gaussian_tables(order)
    a, b, c = act.a, act.b, act.c
    t = norms
    C = np.zeros((order + 1, t.size))
    mean_t = (a - c) * t * PHI0 + b
    C[0] = (mean_t - act.shift) / act.scale
    for k in range(1, order + 1):
        C[k] = (a - c) * t * N[k] / act.scale
    if order >= 1:
        C[1] += c * t / act.scale
    return C


def _piecewise_eta(act: Activation, order: int) -> np.ndarray:
    """eta_k of the normalized piecewise activation (independent of t > 0)."""
    M, _ = _half_gaussian_tables(order)
    a, c = act.a, act.c
    eta = (a - c) * M / act.scale
    eta[0] += c / act.scale
    return eta


# ---------------------------------------------------------------------------
# scaled moment tables shared by kernel constructions
# ---------------------------------------------------------------------------


def zeta_table(act: Activation, norms, order: int = DEFAULT_ORDER) -> np.ndarray:
    """(order+1, len(norms)) matrix of zeta_k(x -> act(t x)) per column norm t."""
    norms = np.atleast_1d(np.asarray(norms, dtype=float))
    if np.any(norms <= 0):
        raise ValueError("column norms must be positive")
    if order < 3 or order > MAX_HERMITE_ORDER:
        raise ValueError(f"order must be in [3, {MAX_HERMITE_ORDER}]")
    if act.kind == "piecewise":
        return _piecewise_zeta_scaled(act, norms, order)
    x, w = gauss_hermite_nodes()
    tab = _hermite_table(order)
    vals = act(np.outer(norms, x))  # (m, nodes)
    return tab @ (w * vals).T


def deriv_zeta_table(act: Activation, norms, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Same as zeta_table but for x -> act'(t x) (the derivative profile)."""
    norms = np.atleast_1d(np.asarray(norms, dtype=float))
    if np.any(norms <= 0):
        raise ValueError("column norms must be positive")
    if act.kind == "piecewise":
        eta = _piecewise_eta(act, order)
        return np.repeat(eta[:, None], norms.size, axis=1)
    x, w = gauss_hermite_nodes()
    tab = _hermite_table(order)
    vals = act.prime(np.outer(norms, x))
    return tab @ (w * vals).T


def second_moment(act: Activation, norms) -> np.ndarray:
    """E[act(t xi)^2] per norm t."""
    norms = np.atleast_1d(np.asarray(norms, dtype=float))
    if act.kind == "piecewise":
        a, b, c = act.a, act.b, act.c
        t = norms
        mean_t = (a - c) * t * PHI0 + b
        second = 0.5 * (a * t) ** 2 + 0.5 * (c * t) ** 2 + b * b + 2.0 * b * (a - c) * t * PHI0
        return (second - 2.0 * act.shift * mean_t + act.shift**2) / act.scale**2
    x, w = gauss_hermite_nodes()
    return np.sum(w * act(np.outer(norms, x)) ** 2, axis=1)


def deriv_second_moment(act: Activation, norms) -> np.ndarray:
    """E[act'(t xi)^2] per norm t."""
    norms = np.atleast_1d(np.asarray(norms, dtype=float))
    if act.kind == "piecewise":
        val = 0.5 * (act.a**2 + act.c**2) / act.scale**2
        return np.full(norms.shape, val)
    x, w = gauss_hermite_nodes()
    return np.sum(w * act.prime(np.outer(norms, x)) ** 2, axis=1)


def hermite_data(act: Activation, order: int = DEFAULT_ORDER) -> HermiteData:
    """Moment table at unit input scale; order in [3, 60]."""
    one = np.ones(1)
    zeta = zeta_table(act, one, order)[:, 0]
    eta = deriv_zeta_table(act, one, order)[:, 0]
    a_sigma = float(deriv_second_moment(act, one)[0])
    tail = float(second_moment(act, one)[0] - np.sum(zeta**2))
    return HermiteData(zeta=zeta, eta=eta, b_sigma=float(zeta[1]),
                       a_sigma=a_sigma, order=order, tail_mass=max(tail, 0.0))
