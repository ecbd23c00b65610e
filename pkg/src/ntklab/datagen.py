"""Deterministic input data, near-orthonormality diagnostics, spectral measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .util import STREAM_DATA, rng_stream

GENERATORS = ("gaussian-iid-scaled", "sphere-uniform", "file")


@dataclass
class DataMatrix:
    """A deterministic d0 x n input matrix together with its provenance."""

    X: np.ndarray
    kind: str
    seed: int | None = None

    @property
    def d0(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def gram(self) -> np.ndarray:
        return self.X.T @ self.X

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.X, axis=0)


def generate(kind: str, d0: int, n: int, seed: int = 0, path: str | None = None,
             stream: int = STREAM_DATA) -> DataMatrix:
    """Build an input matrix.

    gaussian-iid-scaled: entries N(0, 1/d0), so columns have norm ~ 1.
    sphere-uniform: columns drawn uniformly on the unit sphere (norm exactly 1).
    file: load a d0 x n matrix from `path` (CSV or .bin+.json pair).
    `stream` picks the RNG substream, so train and test sets from the same
    seed stay independent.
    """
    if d0 <= 0 or n <= 0:
        raise ValueError("d0 and n must be positive")
    if kind == "gaussian-iid-scaled":
        rng = rng_stream(seed, stream)
        X = rng.standard_normal((d0, n)) / math.sqrt(d0)
    elif kind == "sphere-uniform":
        rng = rng_stream(seed, stream)
        X = rng.standard_normal((d0, n))
        nrm = np.linalg.norm(X, axis=0)
        if np.any(nrm == 0):  # pragma: no cover - probability zero
            raise ValueError("degenerate zero column while sampling sphere")
        X = X / nrm
    elif kind == "file":
        from .artifacts import load_matrix

        if path is None:
            raise ValueError("file generator needs a path")
        X = load_matrix(path)
        if X.shape != (d0, n):
            raise ValueError(f"file matrix has shape {X.shape}, expected {(d0, n)}")
    else:
        raise ValueError(f"unknown generator {kind!r}; choose from {GENERATORS}")
    return DataMatrix(X=X, kind=kind, seed=seed if kind != "file" else None)


@dataclass
class OrthonormalityReport:
    """How close the columns are to an orthonormal system.

    eps bounds both |norm(x_a) - 1| and the off-diagonal inner products;
    b_norm is the operator norm of X; b_sum is sqrt(sum_a (norm(x_a)-1)^2),
    the smallest B compatible with the sum constraint; n_eps4 = n * eps^4
    is the quantity that must vanish for the deterministic-equivalent
    kernel formulas to hold.
    """

    eps: float
    b_norm: float
    b_sum: float
    n_eps4: float


def orthonormality(dm: DataMatrix | np.ndarray) -> OrthonormalityReport:
    X = dm.X if isinstance(dm, DataMatrix) else np.asarray(dm, dtype=float)
    n = X.shape[1]
    G = X.T @ X
    norms = np.sqrt(np.clip(np.diag(G), 0.0, None))
    off = G - np.diag(np.diag(G))
    eps = max(float(np.max(np.abs(norms - 1.0))), float(np.max(np.abs(off))) if n > 1 else 0.0)
    # operator norm via the spectrum of the (symmetric PSD) gram matrix
    evals = np.linalg.eigvalsh((G + G.T) / 2.0)
    b_norm = math.sqrt(max(float(evals[-1]), 0.0))
    b_sum = math.sqrt(float(np.sum((norms - 1.0) ** 2)))
    return OrthonormalityReport(eps=eps, b_norm=b_norm, b_sum=b_sum, n_eps4=n * eps**4)


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------

_GL_NODES = 512


def _gl_theta(n: int = _GL_NODES):
    """Gauss-Legendre nodes/weights on [0, pi]."""
    t, w = roots_legendre(n)
    return (t + 1.0) * (math.pi / 2.0), w * (math.pi / 2.0)


@dataclass
class SpectralMeasure:
    """Probability measure on the real line used as solver/regression input.

    Closed-form families (semicircle, marchenko-pastur) are integrated by a
    512-node Gauss-Legendre rule in the angle variable x = center +
    radius*cos(theta), which absorbs the square-root edge factors and stays
    spectrally accurate; `atoms()` exposes that discretization. Atom
    measures integrate exactly.
    """

    kind: str
    params: dict = field(default_factory=dict)
    _atoms: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_atoms(locations, weights=None) -> "SpectralMeasure":
        x = np.asarray(locations, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("empty atom list")
        if not np.all(np.isfinite(x)):
            raise ValueError("atom locations must be finite")
        if weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape or np.any(w < 0):
                raise ValueError("weights must be nonnegative and match locations")
            s = w.sum()
            if s <= 0:
                raise ValueError("weights must have positive total mass")
            w = w / s
        order = np.argsort(x)
        return SpectralMeasure(kind="atoms", _atoms=(x[order], w[order]))

    @staticmethod
    def point_mass(c: float) -> "SpectralMeasure":
        c = float(c)
        return SpectralMeasure(kind="point", params={"c": c},
                               _atoms=(np.array([c]), np.array([1.0])))

    @staticmethod
    def semicircle(variance: float = 1.0) -> "SpectralMeasure":
        if variance <= 0:
            raise ValueError("variance must be positive")
        return SpectralMeasure(kind="semicircle", params={"variance": float(variance)})

    @staticmethod
    def marchenko_pastur(gamma: float) -> "SpectralMeasure":
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return SpectralMeasure(kind="mp", params={"gamma": float(gamma)})

    # -- transforms ----------------------------------------------------------

    def affine(self, shift: float, scale: float) -> "SpectralMeasure":
        """Pushforward x -> shift + scale * x; scale 0 collapses to a point."""
        shift, scale = float(shift), float(scale)
        if scale == 0.0:
            return SpectralMeasure.point_mass(shift)
        x, w = self.atoms()
        y = shift + scale * x
        order = np.argsort(y)
        return SpectralMeasure(kind="atoms", params={"affine_of": self.kind},
                               _atoms=(y[order], w[order]))

    # -- structure -----------------------------------------------------------

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        if self._atoms is None:
            self._atoms = self._discretize()
        return self._atoms

    def _discretize(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "semicircle":
            v = self.params["variance"]
            th, gw = _gl_theta()
            x = 2.0 * math.sqrt(v) * np.cos(th)
            w = (2.0 / math.pi) * np.sin(th) ** 2 * gw
            w = w / w.sum()
            order = np.argsort(x)
            return x[order], w[order]
        if self.kind == "mp":
            g = self.params["gamma"]
            lam_minus = (1.0 - math.sqrt(g)) ** 2
            lam_plus = (1.0 + math.sqrt(g)) ** 2
            c = 0.5 * (lam_plus + lam_minus)
            r = 0.5 * (lam_plus - lam_minus)
            th, gw = _gl_theta()
            x = c + r * np.cos(th)
            w = (r * r / (2.0 * math.pi * g)) * np.sin(th) ** 2 / x * gw
            cont_mass = min(1.0, 1.0 / g)
            w = w * (cont_mass / w.sum())
            if g > 1.0:
                x = np.append(x, 0.0)
                w = np.append(w, 1.0 - 1.0 / g)
            order = np.argsort(x)
            return x[order], w[order]
        raise RuntimeError(f"no discretization for kind {self.kind!r}")  # pragma: no cover

    def mean(self) -> float:
        if self.kind == "semicircle":
            return 0.0
        if self.kind == "mp":
            return 1.0
        x, w = self.atoms()
        return float(np.dot(x, w))

    def integrate(self, f) -> float:
        """Integral of f against the measure (exact on atoms, 512-node rule otherwise)."""
        x, w = self.atoms()
        return float(np.dot(w, f(x)))

    def mass_at(self, q) -> np.ndarray:
        """Exact point mass at each query location (0 for continuous parts)."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if self.kind == "semicircle":
            return np.zeros_like(q)
        if self.kind == "mp":
            atom = max(0.0, 1.0 - 1.0 / self.params["gamma"])
            return np.where(q == 0.0, atom, 0.0)
        x, w = self.atoms()
        lo = np.searchsorted(x, q, side="left")
        hi = np.searchsorted(x, q, side="right")
        cw = np.concatenate([[0.0], np.cumsum(w)])
        return cw[hi] - cw[lo]

    def support(self) -> tuple[float, float]:
        if self.kind == "semicircle":
            rad = 2.0 * math.sqrt(self.params["variance"])
            return -rad, rad
        if self.kind == "mp":
            g = self.params["gamma"]
            lo = 0.0 if g >= 1.0 else (1.0 - math.sqrt(g)) ** 2
            return lo, (1.0 + math.sqrt(g)) ** 2
        x, _ = self.atoms()
        return float(x[0]), float(x[-1])

    def cdf(self, q) -> np.ndarray:
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if self.kind == "semicircle":
            v = self.params["variance"]
            rad = 2.0 * math.sqrt(v)
            s = np.clip(q / rad, -1.0, 1.0)
            out = 0.5 + (s * np.sqrt(1.0 - s * s) + np.arcsin(s)) / math.pi
            return out
        if self.kind == "mp":
            return self._mp_cdf(q)
        x, w = self.atoms()
        cw = np.cumsum(w)
        idx = np.searchsorted(x, q, side="right")
        out = np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)
        return out

    def _mp_cdf(self, q) -> np.ndarray:
        g = self.params["gamma"]
        key = "cdf_grid"
        if key not in self.params:
            # integrate in the angle variable x = c + r*cos(theta): the
            # integrand r^2 sin^2(theta) / (2 pi g x) is smooth there even at
            # g = 1, where the density itself has a 1/sqrt(x) edge
            lam_minus = (1.0 - math.sqrt(g)) ** 2
            lam_plus = (1.0 + math.sqrt(g)) ** 2
            c = 0.5 * (lam_plus + lam_minus)
            r = 0.5 * (lam_plus - lam_minus)
            th = np.linspace(math.pi, 0.0, 8193)
            cos_th = np.cos(th)
            xs = c + r * cos_th
            if abs(c - r) < 1e-12:  # g = 1: x = r(1+cos), cancel analytically
                ratio = (1.0 - cos_th) / r
            else:
                ratio = np.sin(th) ** 2 / xs
            integrand = (r * r / (2.0 * math.pi * g)) * ratio
            dth = -np.diff(th)
            cum = np.concatenate(
                [[0.0], np.cumsum((integrand[1:] + integrand[:-1]) * 0.5 * dth)])
            cont_mass = min(1.0, 1.0 / g)
            cum *= cont_mass / cum[-1]
            self.params[key] = (xs, cum)
        xs, cum = self.params[key]
        atom = max(0.0, 1.0 - 1.0 / g)
        out = atom * (q >= 0.0) + np.interp(q, xs, cum, left=0.0, right=cum[-1])
        return out


def empirical_measure(dm: DataMatrix | np.ndarray) -> SpectralMeasure:
    """Atoms (mass 1/n each) at the eigenvalues of the gram matrix X^T X."""
    X = dm.X if isinstance(dm, DataMatrix) else np.asarray(dm, dtype=float)
    G = X.T @ X
    evals = np.linalg.eigvalsh((G + G.T) / 2.0)
    return SpectralMeasure.from_atoms(evals)


def mp_measure(gamma: float) -> SpectralMeasure:
    return SpectralMeasure.marchenko_pastur(gamma)


def mp_density(x, gamma: float):
    """Continuous part of the Marchenko-Pastur density with ratio gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    lam_minus = (1.0 - math.sqrt(gamma)) ** 2
    lam_plus = (1.0 + math.sqrt(gamma)) ** 2
    out = np.zeros_like(x)
    inside = (x > lam_minus) & (x < lam_plus)
    xi = x[inside]
    out[inside] = np.sqrt((lam_plus - xi) * (xi - lam_minus)) / (2.0 * math.pi * gamma * xi)
    return out
