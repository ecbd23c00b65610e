"""Deformed semicircle law: self-consistent equations, density, moments.

For a probability measure mu on [0, inf) (the deformation: the limiting
spectrum of the expected kernel), the limiting spectral law of the centered
ensemble is the free multiplicative convolution of the standard semicircle
with mu. Its Stieltjes transform m(z) solves, on the upper half plane,

    beta(z) + int x / (z + beta(z) x) dmu(x) = 0,
    m(z)    + int 1 / (z + beta(z) x) dmu(x) = 0,

where beta is an auxiliary Stieltjes-like function in C+. The two combine
into the exact identity beta^2 + 1 + z m = 0, used as a consistency check.
The density follows by Stieltjes inversion rho(x) = Im m(x + iv) / pi for
small v, optionally sharpened by (v, 2v) Richardson extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import accel
from .datagen import SpectralMeasure

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 50_000
DEFAULT_DAMPING = 0.5
DEFAULT_V = 1e-4


def deform(mu0: SpectralMeasure, b_sigma: float) -> SpectralMeasure:
    """(1 - b^2) + b^2 * mu0: the deformation induced by activation slope b."""
    if b_sigma < -1e-12:  # tolerate quadrature-zero b of centered activations
        raise ValueError("b_sigma must lie in [0, 1]")
    b2 = min(float(b_sigma) ** 2, 1.0)
    if b_sigma > 1.0 + 1e-12:
        raise ValueError("b_sigma cannot exceed 1 for a normalized activation")
    return mu0.affine(shift=1.0 - b2, scale=b2)


@dataclass
class PointSolution:
    z: complex
    beta: complex
    m: complex
    res_beta: float
    res_consistency: float
    iterations: int
    converged: bool


@dataclass
class LawSolution:
    """Solver output along a real grid at height v."""

    x: np.ndarray
    density: np.ndarray
    beta: np.ndarray
    m: np.ndarray
    res_beta: np.ndarray
    res_consistency: np.ndarray
    v: float
    richardson: bool
    converged: np.ndarray
    warnings: list = field(default_factory=list)


def solve_point(measure: SpectralMeasure, z: complex, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, damping: float = DEFAULT_DAMPING,
                beta0: complex | None = None) -> PointSolution:
    """Damped fixed-point solve of the pair (beta, m) at one z in C+.

    Starts at beta = i unless warm-started, keeps iterates in C+, and falls
    back to the undamped iteration from the best point reached if the damped
    pass stalls.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must lie in the open upper half plane")
    if not (0 < damping <= 1):
        raise ValueError("damping must be in (0, 1]")
    xs, ws = measure.atoms()
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ws = np.ascontiguousarray(ws, dtype=np.float64)
    b0 = complex(beta0) if beta0 is not None else 1j
    if b0.imag <= 0:
        b0 = complex(b0.real, 1e-3)
    beta, m, res, it = accel.fixed_point_step(xs, ws, z, b0, float(damping),
                                              float(tol), int(max_iter))
    converged = res <= tol
    if not converged and damping < 1.0:
        beta, m, res, it2 = accel.fixed_point_step(xs, ws, z, beta, 1.0,
                                                   float(tol), int(max_iter))
        it += it2
        converged = res <= tol
    cons = abs(beta * beta + 1.0 + z * m)
    return PointSolution(z=z, beta=complex(beta), m=complex(m), res_beta=float(res),
                         res_consistency=float(cons), iterations=int(it),
                         converged=bool(converged))


def default_grid(measure: SpectralMeasure, points: int = 600, pad: float = 0.25) -> np.ndarray:
    """Symmetric grid covering the support [-2 max|x|, 2 max|x|] plus padding."""
    xs, _ = measure.atoms()
    radius = 2.0 * float(np.max(np.abs(xs)))
    if radius <= 0:
        radius = 1.0
    return np.linspace(-radius - pad, radius + pad, int(points))


def _solve_line(measure, grid, v, tol, max_iter, damping):
    beta = np.empty(grid.size, dtype=complex)
    m = np.empty(grid.size, dtype=complex)
    res = np.empty(grid.size)
    cons = np.empty(grid.size)
    conv = np.empty(grid.size, dtype=bool)
    warm = None
    for i, x in enumerate(grid):
        p = solve_point(measure, complex(x, v), tol=tol, max_iter=max_iter,
                        damping=damping, beta0=warm)
        beta[i], m[i] = p.beta, p.m
        res[i], cons[i], conv[i] = p.res_beta, p.res_consistency, p.converged
        warm = p.beta
    return beta, m, res, cons, conv


def solve_density(measure: SpectralMeasure, grid: np.ndarray | None = None,
                  v: float = DEFAULT_V, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, damping: float = DEFAULT_DAMPING,
                  richardson: bool = False, refine: int = 0) -> LawSolution:
    """Density along a real grid via Stieltjes inversion at height v.

    Continuation: each grid point warm-starts from its left neighbor.
    richardson combines heights (v, 2v) to cancel the O(v) smoothing bias.
    refine > 0 adds midpoints where the density changes fastest and re-solves
    them (one pass per unit of refine).
    """
    if v <= 0:
        raise ValueError("v must be positive")
    if grid is None:
        grid = default_grid(measure)
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 2:
        raise ValueError("grid needs at least two points")

    warnings = []
    for _ in range(max(0, int(refine)) + 1):
        beta, m, res, cons, conv = _solve_line(measure, grid, v, tol, max_iter, damping)
        dens = np.maximum(m.imag / math.pi, 0.0)
        if richardson:
            _, m2, res2, cons2, conv2 = _solve_line(measure, grid, 2.0 * v, tol,
                                                    max_iter, damping)
            dens = np.maximum((2.0 * m.imag - m2.imag) / math.pi, 0.0)
            res = np.maximum(res, res2)
            cons = np.maximum(cons, cons2)
            conv = conv & conv2
        if refine <= 0:
            break
        drho = np.abs(np.diff(dens))
        cut = 0.05 * max(float(dens.max()), 1e-300)
        new = (grid[1:][drho > cut] + grid[:-1][drho > cut]) / 2.0
        if new.size == 0:
            break
        grid = np.sort(np.concatenate([grid, new]))
        refine -= 1

    if not np.all(conv):
        warnings.append(f"{int(np.sum(~conv))} grid points did not reach tol={tol}")
    return LawSolution(x=grid, density=dens, beta=beta, m=m, res_beta=res,
                       res_consistency=cons, v=v, richardson=richardson,
                       converged=conv, warnings=warnings)


def free_second_moment(measure: SpectralMeasure) -> float:
    """Second moment of the limit law: the squared mean of the deformation."""
    return measure.mean() ** 2


def moments(solution: LawSolution) -> dict:
    """Trapezoid moments of the recovered density; errors if mass is short.

    Returns mass, m1, m2. A mass below 0.99 means the grid missed support.
    """
    x, rho = solution.x, solution.density
    mass = float(np.trapezoid(rho, x))
    if mass < 0.99:
        raise ValueError(f"density mass {mass:.4f} < 0.99: grid does not cover the support")
    return {
        "mass": mass,
        "m1": float(np.trapezoid(rho * x, x)),
        "m2": float(np.trapezoid(rho * x * x, x)),
    }


def density_cdf(solution: LawSolution):
    """Normalized piecewise-linear CDF of the recovered density, for KS use."""
    x, rho = solution.x, solution.density
    cum = np.concatenate([[0.0], np.cumsum((rho[1:] + rho[:-1]) * 0.5 * np.diff(x))])
    total = cum[-1]
    if total <= 0:
        raise ValueError("density is identically zero on the grid")
    cum = cum / total

    def cdf(q):
        return np.interp(np.asarray(q, dtype=float), x, cum, left=0.0, right=1.0)

    return cdf
