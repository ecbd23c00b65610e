"""Monte-Carlo verification of the non-asymptotic kernel results.

Covers operator-norm concentration of the empirical kernels around their
means, smallest-eigenvalue floors, the Frobenius-fluctuation limit, and
quadratic-form (Hanson-Wright type) concentration of y = sigma(w^T X)^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activation import Activation, hermite_data
from .datagen import orthonormality
from .kernels import build_empirical, expected_phi, expected_psi
from .util import STREAM_PROBE, rng_stream


def _op_norm(M: np.ndarray) -> float:
    ev = np.linalg.eigvalsh((M + M.T) / 2.0)
    return float(max(abs(ev[0]), abs(ev[-1])))


def floors(act: Activation) -> tuple[float, float]:
    """Deterministic lower-bound levels (floor_ck, floor_ntk) from moment data."""
    h = hermite_data(act)
    return h.floor_ck, h.floor_ntk


@dataclass
class SweepRecord:
    n: int
    d0: int
    d1: int
    seed: int
    op_ck: float
    op_grad: float
    op_ntk: float
    lmin_ck: float
    lmin_ntk: float
    frob: float
    floor_ck: float
    floor_ntk: float


@dataclass
class ConcentrationReport:
    records: list
    theory: dict = field(default_factory=dict)

    def median_op_ck(self, d1: int) -> float:
        vals = [r.op_ck for r in self.records if r.d1 == d1]
        return float(np.median(vals))

    def slope_loglog(self) -> float:
        """Fitted log-log slope of median op_ck deviation vs d1 (target -1/2)."""
        d1s = sorted({r.d1 for r in self.records})
        if len(d1s) < 2:
            raise ValueError("need at least two d1 values for a slope")
        med = [self.median_op_ck(d) for d in d1s]
        coef = np.polyfit(np.log(np.asarray(d1s, float)), np.log(np.asarray(med)), 1)
        return float(coef[0])


def theory_envelope(X, act: Activation, d1: int) -> dict:
    """Bound shapes evaluated from the data; absolute constants reported, not fitted.

    op_ck: (sqrt(n/d1) + n/d1) * lip^2 |X|^2 (unit constant) plus the
    32 B lip^2 |X| sqrt(n/d1) cross term; op_grad: 10 lip^4 |X|^4
    sqrt(log n / d1).
    """
    rep = orthonormality(X)
    M = X.X if hasattr(X, "X") else np.asarray(X)
    n = M.shape[1]
    lip = act.lipschitz
    ratio = n / d1
    B = max(rep.b_norm, rep.b_sum)
    return {
        "op_ck_shape": (math.sqrt(ratio) + ratio) * lip**2 * rep.b_norm**2
        + 32.0 * B * lip**2 * rep.b_norm * math.sqrt(ratio),
        "op_grad_shape": 10.0 * lip**4 * rep.b_norm**4 * math.sqrt(math.log(n) / d1),
        "eps": rep.eps,
        "b_norm": rep.b_norm,
    }


def sweep_op_norm(X, act: Activation, d1_list, trials: int = 20, seed: int = 0,
                  include_ntk: bool = True, order: int = 40) -> ConcentrationReport:
    """Deviation norms per (d1, trial) around the Hermite-series means."""
    phi = expected_phi(X, act, method="hermite-series", order=order)
    psi = expected_psi(X, act, method="hermite-series", order=order) if include_ntk else None
    M = X.X if hasattr(X, "X") else np.asarray(X)
    d0, n = M.shape
    f_ck, f_ntk = floors(act)
    records = []
    for d1 in d1_list:
        for t in range(trials):
            km = build_empirical(M, act, int(d1), seed=_trial_seed(seed, d1, t),
                                 include_ntk=include_ntk)
            op_grad = op_ntk = float("nan")
            lmin_ntk = float("nan")
            if include_ntk:
                op_grad = _op_norm(km.grad - psi)
                op_ntk = _op_norm(km.ntk - phi - psi)
                lmin_ntk = float(np.linalg.eigvalsh(km.ntk)[0])
            diff = km.ck - phi
            records.append(SweepRecord(
                n=n, d0=d0, d1=int(d1), seed=_trial_seed(seed, d1, t),
                op_ck=_op_norm(diff),
                op_grad=op_grad, op_ntk=op_ntk,
                lmin_ck=float(np.linalg.eigvalsh(km.ck)[0]),
                lmin_ntk=lmin_ntk,
                frob=math.sqrt(km.d1) / n * float(np.linalg.norm(diff)),
                floor_ck=f_ck, floor_ntk=f_ntk,
            ))
    theory = {int(d1): theory_envelope(M, act, int(d1)) for d1 in d1_list}
    return ConcentrationReport(records=records, theory=theory)


def _trial_seed(seed: int, d1, t: int) -> int:
    # stable per-cell seed so cells can run in any order
    return int(seed) * 1_000_000 + int(d1) % 997 * 1000 + int(t)


def lambda_min_check(X, act: Activation, d1: int, seed: int = 0) -> SweepRecord:
    """Smallest eigenvalues of one empirical draw vs the deterministic floors."""
    if act.is_linear:
        raise ValueError("linear activation: smallest eigenvalues are set by X^T X, "
                         "the floors are vacuous")
    M = X.X if hasattr(X, "X") else np.asarray(X)
    km = build_empirical(M, act, d1, seed=seed, include_ntk=True)
    f_ck, f_ntk = floors(act)
    return SweepRecord(
        n=M.shape[1], d0=M.shape[0], d1=d1, seed=seed,
        op_ck=float("nan"), op_grad=float("nan"), op_ntk=float("nan"),
        lmin_ck=float(np.linalg.eigvalsh(km.ck)[0]),
        lmin_ntk=float(np.linalg.eigvalsh(km.ntk)[0]),
        frob=float("nan"), floor_ck=f_ck, floor_ntk=f_ntk,
    )


def frobenius_fluctuation(X, act: Activation, d1: int, seeds=range(20),
                          phi: np.ndarray | None = None) -> dict:
    """Mean of (sqrt(d1)/n) |ck - Phi|_F over seeds, with the free-limit target.

    The limit is sqrt of the second moment of the deformed semicircle law,
    which equals the mean of the deformation (1 - b^2) + b^2 * mu0.
    """
    M = X.X if hasattr(X, "X") else np.asarray(X)
    n = M.shape[1]
    if phi is None:
        phi = expected_phi(M, act, method="hermite-series")
    vals = []
    for s in seeds:
        km = build_empirical(M, act, d1, seed=int(s), include_ntk=False)
        vals.append(math.sqrt(d1) / n * float(np.linalg.norm(km.ck - phi)))
    h = hermite_data(act)
    b2 = h.b_sigma**2
    target = (1.0 - b2) + b2 * float(np.trace(M.T @ M)) / n
    return {"per_seed": vals, "mean": float(np.mean(vals)), "target": target}


def make_probe_matrix(kind: str, n: int, seed: int = 0) -> np.ndarray:
    """Test matrices for the quadratic-form probe, all with norm <= 1."""
    if kind == "zero":
        return np.zeros((n, n))
    if kind == "identity":
        return np.eye(n)
    rng = rng_stream(seed, STREAM_PROBE)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if kind == "projector":
        return q[:, : n // 2] @ q[:, : n // 2].T
    if kind == "rot-diag":
        d = rng.uniform(-1.0, 1.0, size=n)
        return (q * d) @ q.T
    raise ValueError(f"unknown probe matrix kind {kind!r}")


@dataclass
class HWProbe:
    """Samples of y^T A y - Tr(A Phi) over fresh rows y = sigma(w^T X)^T."""

    samples: np.ndarray
    mean: float
    stderr: float
    scaled_second_moment: float
    tail_t: np.ndarray
    tail_freq: np.ndarray


def hanson_wright_probe(X, act: Activation, matrix_kind: str = "identity",
                        draws: int = 2000, seed: int = 0,
                        phi: np.ndarray | None = None,
                        t_grid=None) -> HWProbe:
    M = X.X if hasattr(X, "X") else np.asarray(X)
    n = M.shape[1]
    A = make_probe_matrix(matrix_kind, n, seed=seed)
    if phi is None:
        phi = expected_phi(M, act, method="hermite-series")
    target = float(np.trace(A @ phi))
    rng = rng_stream(seed, STREAM_PROBE, 1)
    Y = act(rng.standard_normal((draws, M.shape[0])) @ M)
    stats = np.einsum("ij,jk,ik->i", Y, A, Y) - target
    if t_grid is None:
        t_grid = np.array([0.5, 1.0, 2.0, 4.0]) * n
    t_grid = np.asarray(t_grid, dtype=float)
    freq = np.array([float(np.mean(np.abs(stats) > t)) for t in t_grid])
    return HWProbe(
        samples=stats,
        mean=float(stats.mean()),
        stderr=float(stats.std(ddof=1) / math.sqrt(draws)) if draws > 1 else float("inf"),
        scaled_second_moment=float(np.mean(stats**2)) / n**2,
        tail_t=t_grid,
        tail_freq=freq,
    )
