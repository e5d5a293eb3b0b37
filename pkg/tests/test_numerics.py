import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from transferchain.errors import DimensionError, DomainError, SingularMatrixError, StochasticityError
from transferchain.numerics import (
    as_matrix,
    chi_square_sf,
    eig_two_state,
    mat_mul,
    mat_pow,
    regularized_gamma_q,
    solve_linear,
)

P1 = [[0.795, 0.205], [0.257, 0.743]]


def gamma_q_by_quadrature(s, x):
    """Independent oracle: integrate the gamma density tail numerically."""
    if s < 1:
        # substitute t = u**2 to remove the integrable singularity at 0
        head, _ = quad(lambda u: 2 * u ** (2 * s - 1) * math.exp(-u * u), 0, math.sqrt(x), epsabs=1e-15)
        return 1.0 - head / math.gamma(s)
    tail, _ = quad(lambda t: t ** (s - 1) * math.exp(-t), x, math.inf, epsabs=1e-15, epsrel=1e-13)
    return tail / math.gamma(s)


def brute_product(m, k):
    out = np.eye(len(m))
    for _ in range(k):
        out = out @ np.asarray(m)
    return out


def stochastic(rows):
    m = np.asarray(rows, dtype=float) + 1e-3
    return m / m.sum(axis=1, keepdims=True)


stochastic_2x2 = st.tuples(st.floats(0, 1), st.floats(0, 1)).map(
    lambda ab: np.array([[1 - ab[0], ab[0]], [ab[1], 1 - ab[1]]])
)
stochastic_nxn = st.integers(2, 5).flatmap(
    lambda n: st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n), min_size=n, max_size=n)
).map(stochastic)


class TestMatrix:
    def test_read_only(self):
        m = as_matrix([[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            m[0, 0] = 5

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            as_matrix([[1, float("nan")]])

    def test_identity_product(self):
        m = np.array([[0.3, 0.7], [0.9, 0.1]])
        np.testing.assert_array_equal(mat_mul(np.eye(2), m), m)

    def test_square_of_published_matrix(self):
        # by hand: 0.795^2 + 0.205*0.257 = 0.684710; 0.257*(0.795 + 0.743) = 0.395266
        expected = [[0.684710, 0.315290], [0.395266, 0.604734]]
        np.testing.assert_allclose(mat_mul(P1, P1), expected, atol=1e-12)

    def test_row_selection(self):
        np.testing.assert_allclose(mat_mul([1, 0], P1), [[0.795, 0.205]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mat_mul(np.ones((2, 3)), np.ones((2, 3)))

    def test_pow_zero_is_identity(self):
        np.testing.assert_array_equal(mat_pow(P1, 0), np.eye(2))

    def test_pow_ten_published(self):
        np.testing.assert_allclose(mat_pow(P1, 10), [[0.557, 0.443], [0.555, 0.445]], atol=1e-3)

    def test_pow_matches_chain_of_products(self):
        m = np.array([[0.2, 0.5, 0.3], [0.1, 0.1, 0.8], [0.6, 0.3, 0.1]])
        np.testing.assert_allclose(mat_pow(m, 5), brute_product(m, 5), atol=1e-12, rtol=0)

    def test_pow_non_square(self):
        with pytest.raises(DimensionError):
            mat_pow(np.ones((2, 3)), 2)

    def test_pow_negative(self):
        with pytest.raises(DomainError):
            mat_pow(P1, -1)

    @settings(max_examples=60, deadline=None)
    @given(stochastic_nxn, st.integers(0, 200))
    def test_powers_stay_stochastic(self, m, k):
        pk = mat_pow(m, k)
        np.testing.assert_allclose(pk.sum(axis=1), 1.0, atol=1e-9)
        assert pk.min() >= -1e-12 and pk.max() <= 1 + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(stochastic_nxn, st.integers(0, 32), st.integers(0, 32))
    def test_chapman_kolmogorov(self, m, j, k):
        np.testing.assert_allclose(mat_pow(m, j + k), mat_mul(mat_pow(m, j), mat_pow(m, k)), atol=1e-10, rtol=0)


class TestEigen:
    def test_published_second_eigenvalue(self):
        es = eig_two_state(P1)
        assert es.eigenvalues[0] == 1.0
        assert es.eigenvalues[1] == pytest.approx(0.538, abs=1e-3)

    def test_rank_one(self):
        assert eig_two_state([[0.5, 0.5], [0.5, 0.5]]).eigenvalues == pytest.approx((1.0, 0.0))

    def test_identity(self):
        es = eig_two_state(np.eye(2))
        assert es.eigenvalues == (1.0, 1.0)
        np.testing.assert_allclose(es.reconstruct(), np.eye(2), atol=1e-12)

    def test_eigenvectors_up_to_scale(self):
        # published Q columns are (0.707, 0.707) and (-0.624, 0.781) up to sign and scale
        es = eig_two_state(P1)
        v = es.q[:, 1] / np.linalg.norm(es.q[:, 1])
        assert abs(abs(v @ np.array([-0.624, 0.781]) / np.linalg.norm([-0.624, 0.781])) - 1) < 1e-4
        np.testing.assert_allclose(np.abs(es.q[:, 0]), [0.707, 0.707], atol=1e-3)

    def test_rejects_non_stochastic(self):
        with pytest.raises(StochasticityError):
            eig_two_state([[0.5, 0.4], [0.5, 0.5]])

    @settings(max_examples=200, deadline=None)
    @given(stochastic_2x2)
    def test_reconstruction(self, p):
        es = eig_two_state(p)
        assert np.max(np.abs(es.q @ es.q_inv - np.eye(2))) < 1e-10
        assert np.max(np.abs(es.q @ es.lam @ es.q_inv - p)) < 1e-10
        np.testing.assert_allclose(p @ es.q[:, 0], es.q[:, 0], atol=1e-12)


class TestSolve:
    def test_identity(self):
        b = np.array([[1.5, -2.0], [3.0, 0.25]])
        np.testing.assert_allclose(solve_linear(np.eye(2), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(solve_linear([[2, 0], [0, 4]], [1, 1]).ravel(), [0.5, 0.25])

    def test_needs_pivoting(self):
        x = solve_linear([[0, 1], [1, 0]], [3, 7]).ravel()
        np.testing.assert_allclose(x, [7, 3])

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            solve_linear([[1, 2], [2, 4]], [1, 1])

    def test_random_well_conditioned(self):
        rng = np.random.default_rng(20240517)
        for _ in range(100):
            n = int(rng.integers(1, 8))
            a = rng.normal(size=(n, n)) + n * np.eye(n)
            b = rng.normal(size=(n, 2))
            x = solve_linear(a, b)
            assert np.max(np.abs(a @ x - b)) < 1e-9 * max(1.0, np.max(np.abs(b)))


class TestIncompleteGamma:
    def test_zero_argument(self):
        for s in (0.1, 0.5, 1, 7.5):
            assert regularized_gamma_q(s, 0) == 1.0

    @pytest.mark.parametrize(
        "s,x",
        [(0.5, 1.92), (0.5, 14.989), (0.5, 0.01), (1.0, 2.0), (2.5, 1.0), (2.5, 10.0), (10.0, 9.0), (10.0, 30.0), (0.3, 5.0)],
    )
    def test_against_quadrature(self, s, x):
        assert regularized_gamma_q(s, x) == pytest.approx(gamma_q_by_quadrature(s, x), abs=1e-10)

    def test_exponential_closed_form(self):
        for x in (0.1, 1.0, 3.0, 20.0):
            assert regularized_gamma_q(1.0, x) == pytest.approx(math.exp(-x), abs=1e-12)

    def test_spec_examples(self):
        assert regularized_gamma_q(0.5, 1.92) == pytest.approx(0.0500, abs=5e-4)
        assert regularized_gamma_q(0.5, 14.989) == pytest.approx(4.4e-8, rel=0.1)

    def test_domain(self):
        with pytest.raises(DomainError):
            regularized_gamma_q(0, 1)
        with pytest.raises(DomainError):
            regularized_gamma_q(1, -0.5)


class TestChiSquareSF:
    def test_zero(self):
        assert chi_square_sf(0, 1) == 1.0

    def test_critical_value(self):
        assert chi_square_sf(3.84, 1) == pytest.approx(0.050, abs=1e-3)

    def test_table1_statistic(self):
        assert chi_square_sf(29.978, 1) == pytest.approx(4.4e-8, rel=0.1)

    def test_two_df_closed_form(self):
        for x in (0.5, 3.0, 12.0):
            assert chi_square_sf(x, 2) == pytest.approx(math.exp(-x / 2), abs=1e-12)

    @pytest.mark.parametrize("df", [1, 2, 3, 4, 5])
    def test_monotone(self, df):
        values = [chi_square_sf(x, df) for x in np.linspace(0, 40, 100)]
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_bad_df(self):
        with pytest.raises(DomainError):
            chi_square_sf(1.0, 0)
