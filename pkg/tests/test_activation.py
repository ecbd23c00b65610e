"""Hermite machinery and normalized activations.

Frozen constants come from an independent oracle: scipy.integrate.quad of the
raw functions against the Gaussian weight on [-12, 12], with the Hermite
recurrence evaluated in plain Python. The package computes the same numbers
via 200-node Gauss-Hermite tables (smooth case) or half-Gaussian closed forms
(piecewise case), so agreement is a genuine cross-check.
"""

import math

import numpy as np
import pytest

from ntklab.activation import (
    BUILTIN_NAMES,
    DEFAULT_ORDER,
    MAX_HERMITE_ORDER,
    Activation,
    gauss_hermite_nodes,
    hermite_data,
    hermite_poly,
    normalize,
    zeta_table,
    deriv_zeta_table,
    second_moment,
    deriv_second_moment,
)

# oracle: scipy quad against exp(-x^2/2)/sqrt(2*pi)
RELU_SHIFT = 0.3989422804014327      # 1/sqrt(2*pi)
RELU_SCALE = 0.5838193701035489      # sqrt(1/2 - 1/(2*pi))
RELU_ZETA = (0.0, 0.85642927522483148, 0.48318847612720439, 0.0,
             -0.13948449838068333, 0.0, 0.076398806185393076)
RELU_ETA = (0.85642927522483159, 0.68333169612148104, 0.0)
RELU_A_SIGMA = 1.4669422069242606
RELU_FLOOR_CK = 0.033057793075739861
RELU_FLOOR_NTK = 0.26652889653787021
COS_SHIFT = 0.60653065971263342      # exp(-1/2)
COS_SCALE = 0.44697673367510316      # sqrt((1+exp(-2))/2 - exp(-1))
ORACLE_B_A = {
    "arctan": (0.97775432870966217, 1.1118500801907505),
    "sigmoid": (0.99205199807832767, 1.0335923900399346),
    "tanh": (0.96460868937372368, 1.1778072323041773),
    "cos": (0.0, 2.163953413738652),
}


def test_hermite_poly_base_cases():
    assert hermite_poly(0, 3.7) == 1.0
    assert hermite_poly(1, -2.0) == -2.0
    assert hermite_poly(2, 0.0) == pytest.approx(-1.0 / math.sqrt(2.0), abs=1e-15)


def test_hermite_poly_vectorized_recurrence():
    x = np.linspace(-3, 3, 7)
    # h_3(x) = (x^3 - 3x) / sqrt(6)
    expect = (x**3 - 3 * x) / math.sqrt(6.0)
    assert np.allclose(hermite_poly(3, x), expect, atol=1e-12)


def test_hermite_poly_order_cap():
    assert np.isfinite(hermite_poly(MAX_HERMITE_ORDER, 0.5))
    with pytest.raises(ValueError):
        hermite_poly(MAX_HERMITE_ORDER + 1, 0.5)
    with pytest.raises(ValueError):
        hermite_poly(-1, 0.5)


def test_quadrature_orthonormality():
    # int h_j h_k dN(0,1) = delta_jk, resolved exactly by the quadrature rule
    x, w = gauss_hermite_nodes()
    H = np.stack([hermite_poly(k, x) for k in range(21)])
    G = (H * w) @ H.T
    assert np.max(np.abs(G - np.eye(21))) < 1e-10


def test_relu_normalization_constants():
    act = normalize("relu")
    assert act.shift == pytest.approx(RELU_SHIFT, abs=1e-15)
    assert act.scale == pytest.approx(RELU_SCALE, abs=1e-15)
    assert act.kind == "piecewise"


def test_cos_normalization_constants():
    act = normalize("cos")
    assert act.shift == pytest.approx(COS_SHIFT, abs=1e-14)
    assert act.scale == pytest.approx(COS_SCALE, abs=1e-14)


@pytest.mark.parametrize("name", ["arctan", "cos", "sigmoid", "tanh", "identity"])
def test_smooth_normalized_to_zero_mean_unit_variance(name):
    act = normalize(name)
    x, w = gauss_hermite_nodes()
    vals = act(x)
    assert abs(np.sum(w * vals)) < 1e-8
    assert abs(np.sum(w * vals**2) - 1.0) < 1e-8


def test_relu_normalized_to_zero_mean_unit_variance(relu):
    # Gauss-Hermite stalls on the kink, so integrate piecewise exactly
    from scipy.integrate import quad

    dens = lambda x: math.exp(-x * x / 2.0) / math.sqrt(2.0 * math.pi)
    mean = quad(lambda x: relu(x) * dens(x), -12, 12, points=[0.0], limit=200)[0]
    var = quad(lambda x: relu(x) ** 2 * dens(x), -12, 12, points=[0.0], limit=200)[0]
    assert abs(mean) < 1e-10
    assert abs(var - 1.0) < 1e-10


def test_degenerate_activation_rejected():
    with pytest.raises(ValueError):
        normalize("piecewise", a=0.0, b=1.0, c=0.0)  # constant raw map


def test_unknown_name_rejected():
    with pytest.raises(ValueError):
        normalize("swish")


def test_identity_zeta_is_unit_vector(identity):
    data = hermite_data(identity, order=5)
    assert np.allclose(data.zeta, [0, 1, 0, 0, 0, 0], atol=1e-12)
    assert data.b_sigma == pytest.approx(1.0, abs=1e-12)
    assert data.a_sigma == pytest.approx(1.0, abs=1e-12)
    assert identity.is_linear


def test_relu_hermite_coefficients(relu):
    data = hermite_data(relu, order=6)
    for k, want in enumerate(RELU_ZETA):
        assert data.zeta[k] == pytest.approx(want, abs=1e-12), f"zeta_{k}"
    for k, want in enumerate(RELU_ETA):
        assert data.eta[k] == pytest.approx(want, abs=1e-12), f"eta_{k}"
    assert data.a_sigma == pytest.approx(RELU_A_SIGMA, abs=1e-12)


def test_relu_floors(relu):
    data = hermite_data(relu)
    assert data.floor_ck == pytest.approx(RELU_FLOOR_CK, abs=1e-12)
    assert data.floor_ntk == pytest.approx(RELU_FLOOR_NTK, abs=1e-12)


@pytest.mark.parametrize("name", sorted(ORACLE_B_A))
def test_smooth_b_and_a_sigma(name):
    data = hermite_data(normalize(name))
    b_want, a_want = ORACLE_B_A[name]
    assert data.b_sigma == pytest.approx(b_want, abs=1e-10)
    assert data.a_sigma == pytest.approx(a_want, abs=1e-10)


def test_cos_b_sigma_vanishes(cos_act):
    assert abs(hermite_data(cos_act).b_sigma) < 1e-12


@pytest.mark.parametrize("name", BUILTIN_NAMES[:-1])
def test_parseval_and_eta_bounds(name):
    act = normalize(name)
    data = hermite_data(act)
    zsum = np.cumsum(data.zeta**2)
    assert zsum[-1] <= 1.0 + 1e-8
    assert np.all(np.diff(zsum) >= -1e-15)  # partial sums nondecreasing
    assert np.sum(data.eta**2) <= data.a_sigma + 1e-8


@pytest.mark.parametrize("name", BUILTIN_NAMES[:-1])
def test_stein_identity(name):
    # E[sigma'] = E[xi sigma(xi)], i.e. eta_0 = zeta_1
    data = hermite_data(normalize(name))
    assert data.b_sigma == pytest.approx(data.eta[0], abs=1e-8)
    assert data.b_sigma == pytest.approx(data.zeta[1], abs=1e-12)


@pytest.mark.parametrize("name", ["arctan", "tanh", "identity"])
def test_odd_activation_even_coefficients_vanish(name):
    data = hermite_data(normalize(name))
    assert np.max(np.abs(data.zeta[0::2])) < 1e-10


def test_eta_links_to_zeta_shift():
    # eta_k = sqrt(k+1) zeta_{k+1} for differentiable sigma
    data = hermite_data(normalize("tanh"), order=12)
    want = np.sqrt(np.arange(1, 12)) * data.zeta[1:12]
    assert np.allclose(data.eta[:11], want, atol=1e-8)


def test_relu_eta_links_to_zeta_shift(relu):
    data = hermite_data(relu, order=12)
    want = np.sqrt(np.arange(1, 12)) * data.zeta[1:12]
    assert np.allclose(data.eta[:11], want, atol=1e-12)


def test_tail_mass_shrinks_with_order(relu):
    t10 = hermite_data(relu, order=10).tail_mass
    t40 = hermite_data(relu, order=40).tail_mass
    assert 0.0 <= t40 <= t10
    assert t40 < 1e-3


def test_zeta_table_unit_norm_matches_hermite_data(relu):
    data = hermite_data(relu, order=8)
    tab = zeta_table(relu, np.array([1.0]), order=8)
    assert np.allclose(tab[:, 0], data.zeta, atol=1e-12)
    dtab = deriv_zeta_table(relu, np.array([1.0]), order=8)
    assert np.allclose(dtab[:, 0], data.eta, atol=1e-12)


def test_scaled_second_moments_consistency(relu):
    # E[sigma(t xi)^2] must dominate its truncated Hermite mass at every norm
    norms = np.array([0.5, 1.0, 1.7])
    tab = zeta_table(relu, norms, order=30)
    m2 = second_moment(relu, norms)
    part = np.sum(tab**2, axis=0)
    assert np.all(part <= m2 + 1e-8)
    assert m2[1] == pytest.approx(1.0, abs=1e-10)
    dm2 = deriv_second_moment(relu, norms)
    dpart = np.sum(deriv_zeta_table(relu, norms, order=30) ** 2, axis=0)
    assert np.all(dpart <= dm2 + 1e-8)
    assert dm2[1] == pytest.approx(RELU_A_SIGMA, abs=1e-10)


def test_piecewise_prime_at_kink():
    act = normalize("relu")
    # sigma'(0) uses the at-or-below-zero slope
    assert act.prime(0.0) == pytest.approx(0.0, abs=1e-15)
    assert act.prime(1e-12) == pytest.approx(1.0 / RELU_SCALE, rel=1e-12)


def test_custom_piecewise_matches_smooth_limit():
    # leaky map with equal slopes collapses to a rescaled identity
    act = normalize("piecewise", a=2.0, b=0.5, c=2.0)
    assert act.is_linear
    data = hermite_data(act, order=4)
    assert np.allclose(data.zeta, [0, 1, 0, 0, 0], atol=1e-12)


def test_activation_call_normalizes(relu):
    x = np.array([-1.0, 0.0, 2.0])
    want = (np.maximum(x, 0.0) - RELU_SHIFT) / RELU_SCALE
    assert np.allclose(relu(x), want, atol=1e-15)


def test_hermite_data_order_guard(relu):
    with pytest.raises(ValueError):
        hermite_data(relu, order=MAX_HERMITE_ORDER + 1)
    assert hermite_data(relu, order=DEFAULT_ORDER).order == DEFAULT_ORDER


def test_lipschitz_is_scaled(relu, sigmoid):
    assert relu.lipschitz == pytest.approx(1.0 / RELU_SCALE, rel=1e-12)
    assert sigmoid.lipschitz == pytest.approx(0.25 / sigmoid.scale, rel=1e-12)


def test_relu_canonicalizes_to_piecewise():
    act = normalize("relu")
    assert isinstance(act, Activation)
    # relu is stored as the piecewise map with slopes (1, 0)
    assert act.kind == "piecewise"
    assert (act.a, act.b, act.c) == (1.0, 0.0, 0.0)
