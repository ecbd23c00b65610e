"""Centered kernel ensembles, empirical spectral distributions, distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datagen import SpectralMeasure
from .kernels import KernelMatrices

CENTER_MODES = ("ck-vs-phi", "ck-vs-phi0", "ntk-vs-mean", "ntk-vs-phi0-psi0")


@dataclass
class CenteredEnsemble:
    """sqrt(d1/n) * (empirical kernel - reference), the object with a limit law."""

    matrix: np.ndarray
    mode: str
    d1: int
    n: int


def center(kernels: KernelMatrices, mode: str, phi=None, phi0=None,
           psi=None, psi0=None) -> CenteredEnsemble:
    """Subtract the requested reference and rescale by sqrt(d1/n).

    ck-vs-phi:         ck  - Phi          (expected kernel)
    ck-vs-phi0:        ck  - Phi0         (deterministic equivalent)
    ntk-vs-mean:       ntk - (Phi + Psi)  (its exact mean)
    ntk-vs-phi0-psi0:  ntk - Phi0 - Psi0
    """
    if mode not in CENTER_MODES:
        raise ValueError(f"unknown center mode {mode!r}; choose from {CENTER_MODES}")
    if kernels.d1 <= 0:
        raise ValueError("d1 must be positive")
    if mode == "ck-vs-phi":
        if phi is None:
            raise ValueError("mode ck-vs-phi needs phi")
        raw, ref = kernels.ck, phi
    elif mode == "ck-vs-phi0":
        if phi0 is None:
            raise ValueError("mode ck-vs-phi0 needs phi0")
        raw, ref = kernels.ck, phi0
    elif mode == "ntk-vs-mean":
        if kernels.ntk is None:
            raise ValueError("kernels were built without the ntk part")
        if phi is None or psi is None:
            raise ValueError("mode ntk-vs-mean needs phi and psi")
        raw, ref = kernels.ntk, phi + psi
    else:
        if kernels.ntk is None:
            raise ValueError("kernels were built without the ntk part")
        if phi0 is None or psi0 is None:
            raise ValueError("mode ntk-vs-phi0-psi0 needs phi0 and psi0")
        raw, ref = kernels.ntk, phi0 + psi0
    n = raw.shape[0]
    mat = math.sqrt(kernels.d1 / n) * (raw - ref)
    mat = (mat + mat.T) / 2.0
    return CenteredEnsemble(matrix=mat, mode=mode, d1=kernels.d1, n=n)


@dataclass
class ESD:
    """Empirical spectral distribution: sorted eigenvalues, mass 1/n each."""

    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def measure(self) -> SpectralMeasure:
        return SpectralMeasure.from_atoms(self.eigenvalues)


def esd(matrix) -> ESD:
    """Eigenvalues of a symmetric matrix (or of a CenteredEnsemble)."""
    if isinstance(matrix, CenteredEnsemble):
        matrix = matrix.matrix
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError("need a nonempty square matrix")
    if not np.allclose(M, M.T, atol=1e-10 * (1.0 + np.abs(M).max())):
        raise ValueError("matrix is not symmetric")
    return ESD(eigenvalues=np.sort(np.linalg.eigvalsh((M + M.T) / 2.0)))


def _cdf_callable(ref):
    if isinstance(ref, SpectralMeasure):
        return ref.cdf
    if callable(ref):
        return ref
    raise TypeError("reference must be a SpectralMeasure or a CDF callable")


def ks_distance(sample: ESD, ref) -> float:
    """sup_x |F_emp(x) - F(x)|, evaluated at eigenvalues and gap midpoints.

    At each eigenvalue both the right value and the left limit of the
    difference are checked; when the reference is a SpectralMeasure its own
    jumps enter the left limit exactly, so a sample against its own atom
    measure scores 0. A bare callable is treated as continuous.
    """
    lam = sample.eigenvalues
    n = lam.size
    F = _cdf_callable(ref)
    at = np.asarray(F(lam), dtype=float)
    if np.any(np.diff(at) < -1e-12):
        raise ValueError("reference CDF is not nondecreasing on the sample")
    left = at - ref.mass_at(lam) if isinstance(ref, SpectralMeasure) else at
    steps = np.arange(1, n + 1) / n
    d = max(float(np.max(np.abs(at - steps))),
            float(np.max(np.abs(left - (steps - 1.0 / n)))))
    if n > 1:
        mids = (lam[1:] + lam[:-1]) / 2.0
        at_mid = np.asarray(F(mids), dtype=float)
        d = max(d, float(np.max(np.abs(at_mid - steps[:-1]))))
    return d


def w1_distance(sample: ESD, ref) -> float:
    """Exact Wasserstein-1 distance to a (possibly discretized) measure.

    Both sides are atom measures; W1 = integral of |F1 - F2| over the merged
    support, which is the sorted-quantile coupling cost.
    """
    if isinstance(ref, SpectralMeasure):
        xr, wr = ref.atoms()
    elif isinstance(ref, ESD):
        xr, wr = ref.eigenvalues, np.full(ref.n, 1.0 / ref.n)
    else:
        m = SpectralMeasure.from_atoms(np.asarray(ref, dtype=float))
        xr, wr = m.atoms()
    xs = sample.eigenvalues
    ws = np.full(xs.size, 1.0 / xs.size)
    pts = np.concatenate([xs, xr])
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    delta = np.concatenate([ws, -wr])[order]
    gap = np.diff(pts)
    fdiff = np.cumsum(delta)[:-1]
    return float(np.sum(np.abs(fdiff) * gap))


def histogram(sample: ESD, bins: int | None = None):
    """Density-normalized histogram (edges, density); Freedman-Diaconis default."""
    lam = sample.eigenvalues
    if bins is None:
        q75, q25 = np.percentile(lam, [75, 25])
        iqr = q75 - q25
        if iqr <= 0 or lam.size < 2:
            bins = 1
        else:
            width = 2.0 * iqr / lam.size ** (1.0 / 3.0)
            span = lam[-1] - lam[0]
            bins = max(1, int(math.ceil(span / width))) if span > 0 else 1
    dens, edges = np.histogram(lam, bins=bins, density=True)
    return edges, dens
