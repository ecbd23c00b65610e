"""Random-feature ridge regression against its kernel counterpart.

Finite-sample train/test errors for the random-feature predictor and for
kernel ridge regression with the matching expected kernel, plus the
large-width limits: effective ridge, bias/variance functionals of the
input spectrum, and the limiting train/test errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .activation import Activation, hermite_data
from .datagen import DataMatrix, SpectralMeasure, empirical_measure, generate
from .kernels import (
    DEFAULT_ORDER,
    WeightDraw,
    build_empirical,
    draw_weights,
    empirical_kernel_block,
    expected_cross,
    expected_phi,
    expected_psi,
)
from .util import (
    DEFAULT_BUDGET,
    STREAM_TASK_COEF,
    STREAM_TASK_NOISE,
    STREAM_TEST_DATA,
    block_ranges,
    rng_stream,
)

KERNEL_MODES = ("ck", "ntk-grad", "ntk-full")


@dataclass
class SyntheticTask:
    """Linear target observed through noise: y = X^T beta_star + eps."""

    X: DataMatrix
    test_X: DataMatrix
    beta_star: np.ndarray
    eps: np.ndarray
    y: np.ndarray
    test_f: np.ndarray
    sigma_beta: float
    sigma_eps: float
    seed: int
    noise_seed: int

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def d0(self) -> int:
        return self.X.d0

    @property
    def n_test(self) -> int:
        return self.test_X.n

    def with_noise(self, noise_seed: int) -> "SyntheticTask":
        """Same inputs, fresh (beta_star, eps) draw."""
        beta, eps = _draw_noise(self.d0, self.n, self.sigma_beta, self.sigma_eps,
                                noise_seed)
        return replace(self, beta_star=beta, eps=eps,
                       y=self.X.X.T @ beta + eps,
                       test_f=self.test_X.X.T @ beta,
                       noise_seed=noise_seed)


def _draw_noise(d0: int, n: int, sigma_beta: float, sigma_eps: float, noise_seed: int):
    beta = sigma_beta * rng_stream(noise_seed, STREAM_TASK_COEF).standard_normal(d0)
    eps = sigma_eps * rng_stream(noise_seed, STREAM_TASK_NOISE).standard_normal(n)
    return beta, eps


def make_task(kind: str, d0: int, n: int, n_test: int = 5000,
              sigma_beta: float = 1.0, sigma_eps: float = 0.0,
              seed: int = 0, noise_seed: int | None = None,
              X: DataMatrix | None = None) -> SyntheticTask:
    """Train/test inputs from the same generator, targets from a linear map.

    The test inputs use a separate stream of the same seed, so (X, test_X)
    are independent but jointly reproducible. `noise_seed` (default: seed)
    controls only (beta_star, eps).
    """
    if sigma_beta < 0 or sigma_eps < 0:
        raise ValueError("noise scales must be nonnegative")
    if noise_seed is None:
        noise_seed = seed
    if X is None:
        X = generate(kind, d0, n, seed=seed)
    test_X = generate(kind, d0, n_test, seed=seed, stream=STREAM_TEST_DATA)
    beta, eps = _draw_noise(d0, n, sigma_beta, sigma_eps, noise_seed)
    return SyntheticTask(
        X=X, test_X=test_X, beta_star=beta, eps=eps,
        y=X.X.T @ beta + eps, test_f=test_X.X.T @ beta,
        sigma_beta=float(sigma_beta), sigma_eps=float(sigma_eps),
        seed=seed, noise_seed=noise_seed,
    )


# ---------------------------------------------------------------------------
# limiting quantities
# ---------------------------------------------------------------------------


def lambda_eff(lam: float, act: Activation, kernel_mode: str = "ck") -> float:
    """Effective ridge of the linearized kernel at ridge lam."""
    if lam < 0:
        raise ValueError("ridge parameter must be nonnegative")
    h = hermite_data(act)
    b2 = h.b_sigma**2
    if b2 <= 1e-24:  # quadrature-level zero
        raise ValueError("activation has b_sigma = 0: the linear part vanishes and "
                         "no effective ridge exists")
    a = h.a_sigma
    if kernel_mode == "ck":
        return (1.0 + lam - b2) / b2
    if kernel_mode == "ntk-grad":
        return (a + lam - b2) / b2
    if kernel_mode == "ntk-full":
        return (a + 1.0 + lam - 2.0 * b2) / (2.0 * b2)
    raise ValueError(f"unknown kernel mode {kernel_mode!r}; choose from {KERNEL_MODES}")


def bias_variance(mu0: SpectralMeasure, gamma: float, nu: float) -> tuple[float, float]:
    """(B_K, V_K) at effective ridge nu for input spectrum mu0, ratio gamma = n/d0.

    B_K = (1 - gamma) + gamma nu^2 int (x+nu)^{-2} dmu0,
    V_K = gamma int x (x+nu)^{-2} dmu0. mu0 must sit on [0, inf).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if nu < 0:
        raise ValueError("effective ridge must be nonnegative")
    if math.isinf(nu):
        return 1.0, 0.0
    B = (1.0 - gamma) + gamma * nu**2 * mu0.integrate(lambda x: (x + nu) ** -2.0)
    V = gamma * mu0.integrate(lambda x: x * (x + nu) ** -2.0)
    return float(B), float(V)


def asymptotic_errors(mu0: SpectralMeasure, gamma: float, act: Activation,
                      lam: float, sigma_beta: float, sigma_eps: float,
                      kernel_mode: str = "ck") -> tuple[float, float]:
    """Limiting (train, test) errors of the wide random-feature predictor.

    test = sigma_beta^2 B_K(nu) + sigma_eps^2 V_K(nu);
    train = sigma_beta^2 lam^2 / (gamma s^2) V_K(nu)
          + sigma_eps^2 lam^2 / (gamma (s nu)^2) (B_K(nu) - 1 + gamma)
    with s the linear-part coefficient of the mode's kernel (b^2, or 2b^2
    for the full tangent kernel), so s nu recovers the constant shift.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    h = hermite_data(act)
    b2 = h.b_sigma**2
    if b2 <= 0:
        raise ValueError("b_sigma = 0 admits no limiting ridge formulas")
    nu = lambda_eff(lam, act, kernel_mode)
    B, V = bias_variance(mu0, gamma, nu)
    test = sigma_beta**2 * B + sigma_eps**2 * V
    if lam == 0.0:
        return 0.0, float(test)
    s = 2.0 * b2 if kernel_mode == "ntk-full" else b2
    snu = s * nu
    train = (sigma_beta**2 * lam**2 / (gamma * s**2)) * V \
        + (sigma_eps**2 * lam**2 / (gamma * snu**2)) * (B - 1.0 + gamma)
    return float(train), float(test)


# ---------------------------------------------------------------------------
# finite-sample fit
# ---------------------------------------------------------------------------


@dataclass
class RegressionReport:
    n: int
    d0: int
    d1: int
    lam: float
    kernel_mode: str
    seed: int
    train_rf: float
    train_k: float
    test_rf: float
    test_k: float
    train_asym: float
    test_asym: float
    lambda_eff: float
    # closed-form lam^2/n |alpha|^2 values of the same train errors, kept for
    # the identity cross-check
    train_rf_closed: float = float("nan")
    train_k_closed: float = float("nan")


@dataclass
class ExpectedKernels:
    """Expected train kernel and train/test cross block for one task and mode."""

    K: np.ndarray
    cross: np.ndarray
    kernel_mode: str
    order: int


def expected_kernels(task: SyntheticTask, act: Activation, kernel_mode: str = "ck",
                     order: int = DEFAULT_ORDER) -> ExpectedKernels:
    if kernel_mode not in KERNEL_MODES:
        raise ValueError(f"unknown kernel mode {kernel_mode!r}; choose from {KERNEL_MODES}")
    Xtr = task.X.X
    if kernel_mode == "ck":
        K = expected_phi(Xtr, act, method="hermite-series", order=order)
    elif kernel_mode == "ntk-grad":
        K = expected_psi(Xtr, act, method="hermite-series", order=order)
    else:
        K = expected_phi(Xtr, act, method="hermite-series", order=order) \
            + expected_psi(Xtr, act, method="hermite-series", order=order)
    cross = expected_cross(task.test_X.X, Xtr, act, mode=kernel_mode, order=order)
    return ExpectedKernels(K=K, cross=cross, kernel_mode=kernel_mode, order=order)


def _psd_solve(K: np.ndarray, lam: float, rhs: np.ndarray) -> np.ndarray:
    A = K + lam * np.eye(K.shape[0]) if lam != 0.0 else K
    try:
        return cho_solve(cho_factor(A, lower=True), rhs)
    except LinAlgError:
        if lam == 0.0:
            # ridgeless with nearly rank-deficient kernel: tiny jitter, one retry
            A = K + 1e-12 * np.eye(K.shape[0])
            try:
                return cho_solve(cho_factor(A, lower=True), rhs)
            except LinAlgError:
                pass
        raise LinAlgError(
            f"kernel plus ridge {lam:g} is not positive definite; the inputs are "
            "degenerate or the ridge is too small") from None


def _rf_test_predictions(weights: WeightDraw, act: Activation, Xte: np.ndarray,
                         Xtr: np.ndarray, alpha: np.ndarray,
                         budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """(1/d1) sigma(W Xte)^T sigma(W Xtr) alpha without forming the cross block."""
    d1 = weights.d1
    out = np.zeros(Xte.shape[1])
    rows = max(1, int(budget // max(Xte.shape[1] + Xtr.shape[1], 1)))
    for lo, hi in block_ranges(d1, rows):
        Wb = weights.W[lo:hi]
        out += act(Wb @ Xte).T @ (act(Wb @ Xtr) @ alpha)
    return out / d1


def fit_and_score(task: SyntheticTask, act: Activation, d1: int, lam: float,
                  kernel_mode: str = "ck", seed: int = 0,
                  order: int = DEFAULT_ORDER, budget: int = DEFAULT_BUDGET,
                  mu0: SpectralMeasure | None = None,
                  expected: ExpectedKernels | None = None,
                  weights: WeightDraw | None = None) -> RegressionReport:
    """Fit both predictors on one weight draw and score them.

    Train errors come out of the residual (1/n)|f_hat(X) - y|^2 and are
    cross-checked against the closed form lam^2/n |(K + lam)^{-1} y|^2; the
    closed-form values ride along in the report. Test errors average the
    squared gap to the noiseless target over the task's test columns.
    """
    if lam < 0:
        raise ValueError("ridge parameter must be nonnegative")
    if lam == 0.0 and act.is_linear:
        raise ValueError("ridgeless regression with a linear activation is "
                         "ill-posed here; use lam > 0")
    if expected is None:
        expected = expected_kernels(task, act, kernel_mode, order=order)
    elif expected.kernel_mode != kernel_mode:
        raise ValueError("expected kernels were built for mode "
                         f"{expected.kernel_mode!r}, not {kernel_mode!r}")
    Xtr, Xte = task.X.X, task.test_X.X
    n = task.n
    if weights is None:
        weights = draw_weights(task.d0, d1, seed=seed)
    km = build_empirical(Xtr, act, d1, weights=weights,
                         include_ntk=(kernel_mode != "ck"), budget=budget)
    K_n = {"ck": km.ck, "ntk-grad": km.grad, "ntk-full": km.ntk}[kernel_mode]

    alpha_n = _psd_solve(K_n, lam, task.y)
    alpha_k = _psd_solve(expected.K, lam, task.y)

    train_rf = float(np.sum((K_n @ alpha_n - task.y) ** 2)) / n
    train_k = float(np.sum((expected.K @ alpha_k - task.y) ** 2)) / n
    train_rf_closed = lam**2 * float(np.sum(alpha_n**2)) / n
    train_k_closed = lam**2 * float(np.sum(alpha_k**2)) / n

    if kernel_mode == "ck":
        pred_rf = _rf_test_predictions(weights, act, Xte, Xtr, alpha_n, budget=budget)
    else:
        pred_rf = empirical_kernel_block(weights, act, Xte, Xtr,
                                         mode=kernel_mode, budget=budget) @ alpha_n
    pred_k = expected.cross @ alpha_k
    test_rf = float(np.mean((pred_rf - task.test_f) ** 2))
    test_k = float(np.mean((pred_k - task.test_f) ** 2))

    if mu0 is None:
        mu0 = empirical_measure(task.X)
    gamma = n / task.d0
    train_asym, test_asym = asymptotic_errors(mu0, gamma, act, lam,
                                              task.sigma_beta, task.sigma_eps,
                                              kernel_mode)
    return RegressionReport(
        n=n, d0=task.d0, d1=int(d1), lam=float(lam), kernel_mode=kernel_mode,
        seed=seed, train_rf=train_rf, train_k=train_k,
        test_rf=test_rf, test_k=test_k,
        train_asym=train_asym, test_asym=test_asym,
        lambda_eff=lambda_eff(lam, act, kernel_mode),
        train_rf_closed=train_rf_closed, train_k_closed=train_k_closed,
    )


def rf_theta_hat(weights: WeightDraw, act: Activation, X, y: np.ndarray,
                 lam: float) -> np.ndarray:
    """Explicit ridge solution in feature space: (F F^T + lam)^{-1} F y.

    F = sigma(W X)/sqrt(d1). Solved in the d1 x d1 primal form (least squares
    when lam = 0), independently of the kernel-form route.
    """
    M = X.X if hasattr(X, "X") else np.asarray(X)
    F = act(weights.W @ M) / math.sqrt(weights.d1)
    if lam == 0.0:
        theta, *_ = np.linalg.lstsq(F.T, y, rcond=None)
        return theta
    return _psd_solve(F @ F.T, lam, F @ y)


def rf_predict(weights: WeightDraw, act: Activation, X, theta: np.ndarray) -> np.ndarray:
    M = X.X if hasattr(X, "X") else np.asarray(X)
    return act(weights.W @ M).T @ theta / math.sqrt(weights.d1)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def sweep(task: SyntheticTask, act: Activation, d1_list, lam: float,
          kernel_mode: str = "ck", reps: int = 50, base_seed: int = 0,
          order: int = DEFAULT_ORDER, budget: int = DEFAULT_BUDGET,
          mu0: SpectralMeasure | None = None) -> list:
    """Repetition sweep over widths with inputs held fixed.

    Each repetition redraws the weights and the task noise (beta_star, eps)
    on top of the fixed (X, test_X), the averaging scheme behind the error
    curves. Expected kernels and the limiting errors are computed once.
    """
    expected = expected_kernels(task, act, kernel_mode, order=order)
    if mu0 is None:
        mu0 = empirical_measure(task.X)
    reports = []
    for d1 in d1_list:
        for r in range(reps):
            rep_seed = base_seed + r
            t = task.with_noise(rep_seed)
            reports.append(fit_and_score(
                t, act, int(d1), lam, kernel_mode, seed=rep_seed,
                order=order, budget=budget, mu0=mu0, expected=expected))
    return reports
