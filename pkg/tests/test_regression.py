"""Random-feature ridge vs kernel ridge and their asymptotic predictions."""

import numpy as np
import pytest

from ntklab.activation import hermite_data, normalize
from ntklab.datagen import SpectralMeasure, empirical_measure, generate, mp_measure
from ntklab.kernels import build_empirical, draw_weights, empirical_kernel_block
from ntklab.regression import (
    KERNEL_MODES,
    asymptotic_errors,
    bias_variance,
    expected_kernels,
    fit_and_score,
    lambda_eff,
    make_task,
    rf_predict,
    rf_theta_hat,
    sweep,
)

RELU_LAMEFF_CK = 0.36474360786005044    # lambda = 1e-3, quadrature oracle
RELU_LAMEFF_GRAD = 1.0013633802276325
RELU_LAMEFF_FULL = 0.68237180393002528


def _small_task(sigma_eps=0.5, n=60, d0=80, seed=0):
    return make_task("gaussian-iid-scaled", d0=d0, n=n, n_test=300,
                     sigma_beta=1.0, sigma_eps=sigma_eps, seed=seed)


def test_task_construction_reproducible():
    t1 = _small_task()
    t2 = _small_task()
    assert np.array_equal(t1.y, t2.y)
    assert np.array_equal(t1.test_X.X, t2.test_X.X)
    assert t1.X.n == 60 and t1.test_X.n == 300
    # train and test columns come from independent streams
    assert not np.allclose(t1.X.X[:, 0], t1.test_X.X[:, 0])


def test_with_noise_keeps_data_fixed():
    t = _small_task()
    t2 = t.with_noise(7)
    assert np.array_equal(t.X.X, t2.X.X)
    assert np.array_equal(t.test_X.X, t2.test_X.X)
    assert not np.array_equal(t.beta_star, t2.beta_star)
    want = t2.X.X.T @ t2.beta_star + t2.eps
    assert np.allclose(t2.y, want, atol=1e-12)


def test_lambda_eff_values(relu, identity):
    half = normalize("piecewise", a=1.0, b=0.0, c=-0.2)  # any nonlinearity
    data = hermite_data(half)
    lam = 1.0 - data.b_sigma**2  # engineered so (1+lam-b^2)/b^2 hits a known spot
    assert lambda_eff(lam, half) == pytest.approx(
        (1.0 + lam - data.b_sigma**2) / data.b_sigma**2, rel=1e-12)
    assert lambda_eff(0.25, identity, "ck") == pytest.approx(0.25, abs=1e-12)
    assert lambda_eff(0.25, identity, "ntk-full") == pytest.approx(0.125, abs=1e-12)
    assert lambda_eff(1e-3, relu, "ck") == pytest.approx(RELU_LAMEFF_CK, rel=1e-10)
    assert lambda_eff(1e-3, relu, "ntk-grad") == pytest.approx(RELU_LAMEFF_GRAD,
                                                               rel=1e-10)
    assert lambda_eff(1e-3, relu, "ntk-full") == pytest.approx(RELU_LAMEFF_FULL,
                                                               rel=1e-10)


def test_lambda_eff_zero_ridge(relu):
    data = hermite_data(relu)
    want = (1.0 - data.b_sigma**2) / data.b_sigma**2
    assert lambda_eff(0.0, relu) == pytest.approx(want, rel=1e-12)


def test_lambda_eff_rejects_degenerate(cos_act, relu):
    with pytest.raises(ValueError):
        lambda_eff(0.1, cos_act)  # b_sigma = 0
    with pytest.raises(ValueError):
        lambda_eff(-0.1, relu)


def test_bias_variance_point_mass_closed_form():
    mu = SpectralMeasure.point_mass(1.0)
    for nu in (0.0, 0.3, 1.0, 7.0):
        B, V = bias_variance(mu, 1.0, nu)
        assert B == pytest.approx(nu**2 / (1 + nu) ** 2, rel=1e-12)
        assert V == pytest.approx(1.0 / (1 + nu) ** 2, rel=1e-12)


def test_bias_variance_infinite_ridge():
    B, V = bias_variance(mp_measure(0.5), 0.5, np.inf)
    assert B == 1.0 and V == 0.0


def test_bias_variance_bounds_and_monotonicity():
    mu = mp_measure(0.7)
    nus = np.linspace(0.0, 5.0, 21)
    for gamma in (0.3, 0.7, 1.0):
        prev = -np.inf
        for nu in nus:
            B, V = bias_variance(mu, gamma, float(nu))
            assert 1.0 - gamma - 1e-12 <= B <= 1.0 + 1e-12
            assert V >= 0.0
            assert B >= prev - 1e-12
            prev = B


def test_bias_variance_rejects_bad_args():
    mu = mp_measure(1.0)
    with pytest.raises(ValueError):
        bias_variance(mu, 0.0, 1.0)
    with pytest.raises(ValueError):
        bias_variance(mu, 1.0, -0.5)


def test_asymptotic_errors_infinite_ridge_limit(relu):
    mu = mp_measure(0.5)
    lam_huge = 1e8
    train, test = asymptotic_errors(mu, 0.5, relu, lam_huge, sigma_beta=2.0,
                                    sigma_eps=1.0)
    assert test == pytest.approx(4.0, rel=1e-6)  # sigma_beta^2 * B_K, B_K -> 1


def test_asymptotic_errors_atom_permutation_invariant(relu):
    rng = np.random.default_rng(0)
    atoms = rng.uniform(0.2, 2.0, size=50)
    mu1 = SpectralMeasure.from_atoms(atoms)
    mu2 = SpectralMeasure.from_atoms(atoms[rng.permutation(50)])
    e1 = asymptotic_errors(mu1, 0.8, relu, 1e-2, 1.0, 0.5)
    e2 = asymptotic_errors(mu2, 0.8, relu, 1e-2, 1.0, 0.5)
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_asymptotic_errors_mp_vs_empirical_atoms(relu):
    # quadrature route vs 4000-atom empirical route
    gamma = 0.5
    dm = generate("gaussian-iid-scaled", d0=8000, n=4000, seed=1)
    mu_emp = empirical_measure(dm)
    t_mp = asymptotic_errors(mp_measure(gamma), gamma, relu, 1e-3, 2.0, 1.0)
    t_emp = asymptotic_errors(mu_emp, gamma, relu, 1e-3, 2.0, 1.0)
    assert t_mp[1] == pytest.approx(t_emp[1], rel=1e-2)
    assert t_mp[0] == pytest.approx(t_emp[0], rel=2e-2)


def test_zero_ridge_zero_train_error(relu):
    task = _small_task()
    rep = fit_and_score(task, relu, d1=400, lam=0.0, seed=1)
    assert rep.train_rf == pytest.approx(0.0, abs=1e-8)
    assert rep.train_asym == 0.0


def test_zero_signal_zero_errors(relu):
    task = make_task("gaussian-iid-scaled", d0=40, n=30, n_test=100,
                     sigma_beta=0.0, sigma_eps=0.0, seed=2)
    rep = fit_and_score(task, relu, d1=200, lam=1e-2, seed=0)
    for field in ("train_rf", "train_k", "test_rf", "test_k",
                  "train_asym", "test_asym"):
        assert getattr(rep, field) == pytest.approx(0.0, abs=1e-12)


def test_zero_ridge_linear_rejected(identity):
    task = _small_task()
    with pytest.raises(ValueError):
        fit_and_score(task, identity, d1=100, lam=0.0)
    with pytest.raises(ValueError):
        fit_and_score(task, identity, d1=100, lam=-1e-3)


def test_train_error_closed_form_identity(sigmoid):
    task = _small_task()
    rep = fit_and_score(task, sigmoid, d1=500, lam=1e-2, seed=3)
    ybar = np.sum(task.y**2) / task.n
    tol = 1e-8 * (1.0 + ybar)
    assert abs(rep.train_rf - rep.train_rf_closed) <= tol
    assert abs(rep.train_k - rep.train_k_closed) <= tol


def test_rf_predictor_equivalence(sigmoid):
    # primal theta-hat route vs kernel-form route, per test point
    task = _small_task(n=40, d0=50, seed=4)
    d1, lam = 300, 1e-2
    weights = draw_weights(task.d0, d1, seed=9)
    theta = rf_theta_hat(weights, sigmoid, task.X, task.y, lam)
    direct = rf_predict(weights, sigmoid, task.test_X, theta)
    Kn = empirical_kernel_block(weights, sigmoid, task.X, task.X, mode="ck")
    Kc = empirical_kernel_block(weights, sigmoid, task.test_X, task.X, mode="ck")
    alpha = np.linalg.solve(Kn + lam * np.eye(task.n), task.y)
    via_kernel = Kc @ alpha
    scale = np.maximum(np.abs(via_kernel), 1.0)
    assert np.max(np.abs(direct - via_kernel) / scale) < 1e-8


def test_report_errors_nonnegative_and_lambda_eff(relu):
    task = _small_task()
    rep = fit_and_score(task, relu, d1=256, lam=1e-3, seed=5)
    for field in ("train_rf", "train_k", "test_rf", "test_k",
                  "train_asym", "test_asym"):
        assert getattr(rep, field) >= 0.0
    assert rep.lambda_eff == pytest.approx(RELU_LAMEFF_CK, rel=1e-10)
    assert rep.lambda_eff >= rep.lam


def test_ntk_modes_run(relu):
    task = _small_task(n=30, d0=40, seed=6)
    for mode in KERNEL_MODES:
        rep = fit_and_score(task, relu, d1=200, lam=1e-2, kernel_mode=mode,
                            seed=0)
        assert rep.kernel_mode == mode
        assert np.isfinite(rep.test_rf) and np.isfinite(rep.test_asym)


def test_train_gap_halves_when_d1_quadruples(sigmoid):
    # Task held fixed, only the weights redrawn: the gap statement is
    # conditional on y. Mode ntk-grad because its Hadamard mask kills the
    # resolvent-curvature term that decays like 1/d1 and buries the
    # 1/sqrt(n d1) fluctuation at ck-mode desk scales.
    lam = 1e-3
    task = make_task("gaussian-iid-scaled", d0=60, n=60, n_test=4,
                     sigma_beta=2.0, sigma_eps=1.0, seed=2)
    eye = np.eye(task.n)
    expected = expected_kernels(task, sigmoid, "ntk-grad")
    alpha_k = np.linalg.solve(expected.K + lam * eye, task.y)
    train_k = lam**2 * float(np.sum(alpha_k**2)) / task.n
    med = {}
    for d1 in (500, 2000):
        gaps = []
        for t in range(150):
            w = draw_weights(task.d0, d1, seed=900 + t)
            km = build_empirical(task.X.X, sigmoid, d1, weights=w,
                                 include_ntk=True)
            alpha_n = np.linalg.solve(km.grad + lam * eye, task.y)
            gaps.append(abs(lam**2 * float(np.sum(alpha_n**2)) / task.n
                            - train_k))
        med[d1] = float(np.median(gaps))
    assert 0.4 <= med[2000] / med[500] <= 0.65


def test_sweep_reports_shape_and_determinism(relu):
    task = _small_task(n=30, d0=40, seed=8)
    reports = sweep(task, relu, [100, 200], lam=1e-2, reps=3, base_seed=5)
    assert len(reports) == 6
    again = sweep(task, relu, [100, 200], lam=1e-2, reps=3, base_seed=5)
    for a, b in zip(reports, again):
        assert a.test_rf == b.test_rf and a.train_rf == b.train_rf
    # reps share the expected kernels; asymptotes are constant per d1
    asyms = {r.test_asym for r in reports}
    assert len(asyms) == 1


def test_expected_kernels_cross_shape(relu):
    task = _small_task(n=25, d0=30, seed=9)
    ek = expected_kernels(task, relu, "ck")
    assert ek.K.shape == (25, 25)
    assert ek.cross.shape == (task.test_X.n, 25)
    with pytest.raises(ValueError):
        expected_kernels(task, relu, "laplace")
