import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvcv.cv_core import (PolynomialSpec, argmin_r, batch_means_se, controlled_values, cost_normalized_ratio,
                          estimate_optimal_coeffs, fit_rho_curve, monomial_map, rho_curve, rv_estimate,
                          variance_reduction_factor)
from rvcv.errors import DegenerateDesignError, InvalidArgumentError


def test_coefficient_counts():
    assert PolynomialSpec(1, 1).n_coefficients == 1
    assert PolynomialSpec(3, 2).n_coefficients == 3 + 6
    assert PolynomialSpec(2, 3).n_coefficients == 2 + 3 + 4
    assert PolynomialSpec(2, 2).labels() == ["a_1", "a_2", "b_11", "b_12", "b_22"]


@pytest.mark.parametrize("d,deg", [(0, 1), (1, 0), (1, 4)])
def test_bad_spec(d, deg):
    with pytest.raises(InvalidArgumentError):
        PolynomialSpec(d, deg)


@pytest.mark.parametrize(
    "theta,u,deg,expected",
    [
        ([2.0], [0.5], 1, [0.5]),
        ([1.0], [0.0], 2, [0.0, 2.0]),
        ([1.0], [0.0], 3, [0.0, 2.0, 6.0]),
        ([0.0, 0.0], [0.0, 0.0], 2, [0, 0, 2, 0, 2]),
    ],
)
def test_monomial_examples(theta, u, deg, expected):
    m = monomial_map(theta, u, PolynomialSpec(len(theta), deg))
    np.testing.assert_allclose(m, expected)


def test_monomial_cross_terms():
    th, u = np.array([0.3, -1.2]), np.array([0.7, 2.0])
    m = monomial_map(th, u, PolynomialSpec(2, 2))
    assert m[3] == pytest.approx(2 * th[1] * u[0] + 2 * th[0] * u[1])
    m3 = monomial_map(th, u, PolynomialSpec(2, 3))
    # c_000 and c_001 in canonical order after the five degree <= 2 entries
    assert m3[5] == pytest.approx(6 * th[0] + 3 * th[0] ** 2 * u[0])
    assert m3[6] == pytest.approx(6 * th[1] + 6 * th[0] * th[1] * u[0] + 3 * th[0] ** 2 * u[1])


def test_monomial_matches_laplacian_of_trial_function(rng):
    # m . phi must equal Laplacian P + grad P . u for a random cubic P
    d = 3
    spec = PolynomialSpec(d, 3)
    phi = rng.normal(size=spec.n_coefficients)
    theta, u = rng.normal(size=d), rng.normal(size=d)

    def P(t):
        vals, k = 0.0, 0
        for idx in spec.multi_indices:
            vals += phi[k] * math.factorial(len(idx)) / np.prod([math.factorial(idx.count(i)) for i in set(idx)]) \
                * np.prod(t[list(idx)])
            k += 1
        return vals

    h = 1e-4
    eye = np.eye(d)
    grad = np.array([(P(theta + h * e) - P(theta - h * e)) / (2 * h) for e in eye])
    lap = sum((P(theta + h * e) - 2 * P(theta) + P(theta - h * e)) / h**2 for e in eye)
    assert monomial_map(theta, u, spec) @ phi == pytest.approx(lap + grad @ u, rel=1e-5)


def test_monomial_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        monomial_map([1.0, 2.0], [1.0], PolynomialSpec(2, 1))


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 4), deg=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_monomial_length_and_degree_one_identity(d, deg, seed):
    r = np.random.default_rng(seed)
    th, u = r.normal(size=(7, d)), r.normal(size=(7, d))
    m = monomial_map(th, u, PolynomialSpec(d, deg))
    assert m.shape == (7, PolynomialSpec(d, deg).n_coefficients)
    np.testing.assert_array_equal(m[:, :d], u)


def test_two_sample_coefficients():
    phi = estimate_optimal_coeffs([1.0, -1.0], [[1.0], [-1.0]])
    np.testing.assert_allclose(phi, [-1.0])
    np.testing.assert_allclose(controlled_values([1.0, -1.0], [[1.0], [-1.0]], phi), [0.0, 0.0])


def test_constant_g_gives_zero_coefficients(rng):
    phi = estimate_optimal_coeffs(np.ones(50), rng.normal(size=(50, 3)))
    np.testing.assert_array_equal(phi, np.zeros(3))


def test_raw_moment_mode(rng):
    m = rng.normal(size=(400, 2))
    g = 1.0 + m @ [0.5, -0.2]
    raw = estimate_optimal_coeffs(g, m, centered=False)
    cen = estimate_optimal_coeffs(g, m)
    np.testing.assert_allclose(cen, [-0.5, 0.2], atol=1e-12)
    assert not np.allclose(raw, cen)


def test_degenerate_design_reports_condition_number(rng):
    a = rng.normal(size=100)
    with pytest.raises(DegenerateDesignError) as err:
        estimate_optimal_coeffs(rng.normal(size=100), np.column_stack([a, 2 * a]))
    assert err.value.condition_number > 1e12


def test_exponential_zero_variance_coefficients(rng):
    y = 2.0
    theta = rng.gamma(2.0, 1 / y, size=5000)
    u = -y + 1 / theta
    m = monomial_map(theta[:, None], u[:, None], PolynomialSpec(1, 2))
    phi = estimate_optimal_coeffs(theta, m)
    np.testing.assert_allclose(phi, [0.0, 1 / (2 * y)], atol=1e-9)
    np.testing.assert_allclose(controlled_values(theta, m, [0.0, 0.25]), 1.0, rtol=1e-12)


def test_controlled_values_zero_phi(rng):
    g = rng.normal(size=10)
    np.testing.assert_array_equal(controlled_values(g, rng.normal(size=(10, 2)), np.zeros(2)), g)
    with pytest.raises(InvalidArgumentError):
        controlled_values(g, rng.normal(size=(10, 2)), np.zeros(3))


def test_variance_reduction_examples():
    g = np.array([2.0, -2.0, 2.0, -2.0])
    c = np.array([1.0, -1.0, 1.0, -1.0])
    assert variance_reduction_factor(g, c).R == pytest.approx(4.0)
    d = variance_reduction_factor(g, np.full(4, 3.0))
    assert d.R == math.inf and d.perfect


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(20, 200), k=st.integers(1, 4))
def test_identity_and_optimality(seed, n, k):
    r = np.random.default_rng(seed)
    m = r.normal(size=(n, k))
    g = m @ r.normal(size=k) + r.normal(size=n)
    phi = estimate_optimal_coeffs(g, m)
    c = controlled_values(g, m, phi)
    diag = variance_reduction_factor(g, c)
    assert 1 / diag.R == pytest.approx(1 - diag.rho**2, rel=1e-10, abs=1e-12)
    base = c.var()
    for j in range(k):
        for eps in (1e-3, -1e-3):
            p = phi.copy()
            p[j] += eps
            assert controlled_values(g, m, p).var() >= base - 1e-12


def test_split_estimate(rng):
    m = rng.normal(size=(1000, 1))
    g = 3.0 - 0.8 * m[:, 0] + 0.1 * rng.normal(size=1000)
    est = rv_estimate(g, m, split=True)
    assert est.controlled.size == 500
    assert est.mu_controlled == pytest.approx(3.0, abs=0.02)


def test_batch_means_iid(rng):
    x = rng.normal(size=10000)
    assert batch_means_se(x) == pytest.approx(0.01, rel=0.3)
    assert math.isnan(batch_means_se([1.0]))


def test_rho_fit_recovers_noiseless_curve():
    K = np.array([1, 2, 5, 10])
    rho = rho_curve(K, 1.0, 0.25)
    assert rho[0] ** 2 == pytest.approx(0.8)
    fit = fit_rho_curve(K, np.minimum(rho, 1 - 1e-15))
    assert fit.rho_inf == pytest.approx(1.0, abs=1e-7)
    assert fit.C == pytest.approx(0.25, rel=1e-6)
    assert fit.residual < 1e-6


def test_rho_fit_interior_limit():
    K = np.array([1, 3, 9, 27, 81])
    fit = fit_rho_curve(K, rho_curve(K, 0.7, 0.4))
    assert (fit.rho_inf, fit.C) == pytest.approx((0.7, 0.4))
    assert np.all(np.diff(fit.predict(np.arange(1, 50))) > 0)
    assert np.all(fit.predict(np.arange(1, 50)) <= fit.rho_inf)


@pytest.mark.parametrize("K,rho", [([3, 3, 3], [0.5, 0.6, 0.7]), ([1, 2], [0.5, 1.2]), ([1, 2], [0.0, 0.5])])
def test_rho_fit_errors(K, rho):
    with pytest.raises(InvalidArgumentError):
        fit_rho_curve(K, rho)


def test_cost_ratio_closed_form():
    r = [cost_normalized_ratio(k, 4, 1.0, 1.0, 1.0) for k in range(1, 9)]
    assert r[0] == pytest.approx(0.5)
    assert r[3] == pytest.approx(0.2)
    assert r[4] == pytest.approx(1 / 3)
    assert r[7] == pytest.approx(2 / 9)
    assert argmin_r(8, 4, 1.0, 1.0, 1.0) == 4


def test_serial_case_and_useless_control_variate():
    r = [cost_normalized_ratio(k, 1, 3.0, 0.9, 0.7) for k in range(1, 12)]
    assert np.all(np.diff(r) > 0)
    assert argmin_r(16, 4, 1.0, 0.0, 1.0) == 1


@settings(max_examples=200, deadline=None)
@given(
    K0=st.integers(1, 32),
    c=st.floats(1e-3, 1e6),
    rho_inf=st.floats(1e-3, 1.0),
    C=st.floats(1e-3, 1e3),
    extra=st.integers(0, 64),
)
def test_argmin_is_core_count(K0, c, rho_inf, C, extra):
    assert argmin_r(K0 + extra, K0, c, rho_inf, C) == K0


def test_argmin_matches_brute_force():
    for K0, rho, C in [(3, 0.9, 2.0), (5, 0.5, 0.1), (2, 1.0, 10.0)]:
        vals = [cost_normalized_ratio(k, K0, 7.0, rho, C) for k in range(1, 21)]
        assert argmin_r(20, K0, 7.0, rho, C) == int(np.argmin(vals)) + 1


def test_cost_ratio_preconditions():
    with pytest.raises(InvalidArgumentError):
        cost_normalized_ratio(0, 1, 1.0, 0.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        cost_normalized_ratio(1, 1, 1.0, 1.5, 1.0)
