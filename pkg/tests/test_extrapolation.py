"""Weight construction, combination, and the ridge spectral filter."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from richext import extrapolation as ex


def vandermonde_weights_exact(m):
    """Independent oracle: solve the moment system in exact rationals.

    The weights are defined by sum_i alpha_i = 1 and sum_i alpha_i i^j = 0
    for j = 1..m.  Gaussian elimination over Fraction has no rounding, so
    any disagreement with the closed form is a real bug, not float noise.
    """
    size = m + 1
    rows = [
        [Fraction(i) ** j for i in range(1, size + 1)] + [Fraction(int(j == 0))]
        for j in range(size)
    ]
    for col in range(size):
        pivot = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][size] for i in range(size)]


class TestWeights:
    @pytest.mark.parametrize("m", range(11))
    def test_matches_exact_vandermonde_solve(self, m):
        w = ex.richardson_weights(m)
        oracle = vandermonde_weights_exact(m)
        assert [Fraction(a) for a in w.weights] == oracle

    @pytest.mark.parametrize("m", range(8))
    def test_matches_float_vandermonde_solve(self, m):
        # the numeric route: plain float64 solve of the same moment system.
        # Stops at m=7 because the Vandermonde condition number passes 1e9
        # beyond that and the float solve itself drifts; the exact-fraction
        # oracle above covers the full order range.
        size = m + 1
        vander = np.vander(np.arange(1.0, size + 1), increasing=True).T
        rhs = np.zeros(size)
        rhs[0] = 1.0
        numeric = np.linalg.solve(vander, rhs)
        np.testing.assert_allclose(ex.richardson_weights(m).as_array(),
                                   numeric, rtol=0, atol=1e-8)

    def test_known_small_orders(self):
        assert ex.richardson_weights(0).weights == (1,)
        assert ex.richardson_weights(1).weights == (2, -1)
        assert ex.richardson_weights(3).weights == (4, -6, 4, -1)

    def test_closed_form_binomials(self):
        w = ex.richardson_weights(7)
        for i, alpha in enumerate(w.weights, start=1):
            assert alpha == (-1) ** (i - 1) * math.comb(8, i)

    @given(st.integers(min_value=0, max_value=ex.MAX_ORDER))
    def test_residuals_are_exactly_zero_integers(self, m):
        res = ex.richardson_weights(m).constraint_residuals()
        assert len(res) == m + 1
        assert all(isinstance(r, int) for r in res)
        assert all(r == 0 for r in res)

    def test_rejects_bad_orders(self):
        with pytest.raises(ValueError):
            ex.richardson_weights(-1)
        with pytest.raises(ValueError):
            ex.richardson_weights(ex.MAX_ORDER + 1)
        with pytest.raises(TypeError):
            ex.richardson_weights(1.5)

    def test_weights_are_frozen(self):
        w = ex.richardson_weights(2)
        with pytest.raises(AttributeError):
            w.order = 5


class TestCombine:
    def test_polynomial_cancellation(self):
        # p(lam) = 1 + lam + lam^2 + lam^3 sampled at scales i*lam: the
        # order-m combination must reproduce the constant term up to the
        # first surviving order, exactly for polynomials of degree <= m.
        rng = np.random.default_rng(0)
        coeffs = rng.standard_normal(4)
        for m in (3, 5):
            w = ex.richardson_weights(m)
            lam = 0.37
            estimates = [
                sum(c * (i * lam) ** j for j, c in enumerate(coeffs))
                for i in range(1, m + 2)
            ]
            combined = ex.combine(w, estimates)
            assert combined == pytest.approx(coeffs[0], abs=1e-9)

    def test_leading_error_term_scales(self):
        # with p(lam) = 1 + lam^(m+1), the combination error is the known
        # alpha-weighted power sum; check the exact closed value.
        m = 2
        w = ex.richardson_weights(m)
        lam = 0.01
        estimates = [1.0 + (i * lam) ** (m + 1) for i in range(1, m + 2)]
        expected_err = sum(
            alpha * (i * lam) ** (m + 1)
            for i, alpha in enumerate(w.weights, start=1)
        )
        assert ex.combine(w, estimates) - 1.0 == pytest.approx(
            expected_err, rel=1e-12
        )

    @given(
        st.integers(min_value=0, max_value=6),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=50)
    def test_linearity(self, m, dim, seed):
        rng = np.random.default_rng(seed)
        w = ex.richardson_weights(m)
        a = [rng.standard_normal(dim) for _ in range(m + 1)]
        b = [rng.standard_normal(dim) for _ in range(m + 1)]
        lhs = ex.combine(w, [u + 2.5 * v for u, v in zip(a, b)])
        rhs = ex.combine(w, a) + 2.5 * ex.combine(w, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_preserves_constants(self):
        for m in range(8):
            w = ex.richardson_weights(m)
            out = ex.combine(w, [np.full(3, 7.25)] * (m + 1))
            np.testing.assert_array_equal(out, np.full(3, 7.25))

    def test_shape_and_count_validation(self):
        w = ex.richardson_weights(1)
        with pytest.raises(ValueError):
            ex.combine(w, [np.zeros(2)])
        with pytest.raises(ValueError):
            ex.combine(w, [np.zeros(2), np.zeros(3)])


class TestIterationHalving:
    def test_pair(self):
        assert ex.iteration_halving_pair(8) == (8, 4)

    @pytest.mark.parametrize("k", [0, 1, 3, 7])
    def test_rejects_odd_or_tiny(self, k):
        with pytest.raises(ValueError):
            ex.iteration_halving_pair(k)

    def test_convention_guard(self):
        ex.validate_convention(ex.ScaleConvention.ITERATION_HALVING, 1)
        with pytest.raises(ValueError):
            ex.validate_convention(ex.ScaleConvention.ITERATION_HALVING, 2)
        ex.validate_convention(ex.ScaleConvention.REGULARIZATION_SCALES, 9)


class TestSpectralFilter:
    def test_order_zero_is_plain_shrinkage(self):
        mu = np.geomspace(1e-6, 1e6, 100)
        np.testing.assert_allclose(
            ex.spectral_filter(mu, 0), mu / (mu + 1.0), rtol=1e-12
        )

    def test_against_direct_weight_sum(self):
        mu = np.geomspace(1e-6, 1e6, 100)
        for m in range(9):
            closed = ex.spectral_filter(mu, m)
            direct = ex.spectral_filter_direct(mu, m)
            np.testing.assert_allclose(closed, direct, rtol=1e-10)

    def test_value_at_one_order_one(self):
        assert ex.spectral_filter(1.0, 1) == pytest.approx(2.0 / 3.0,
                                                           rel=1e-15)

    def test_zero_maps_to_zero(self):
        for m in range(0, ex.MAX_ORDER + 1, 4):
            assert ex.spectral_filter(0.0, m) == 0.0

    @given(
        st.floats(min_value=1e-9, max_value=1e9),
        st.integers(min_value=0, max_value=ex.MAX_ORDER),
    )
    def test_range_and_monotonicity_in_order(self, mu, m):
        # s < 1 holds exactly, but once the complement (m+1)!/prod(mu+j)
        # falls under one ulp the nearest double IS 1.0, so only <= is a
        # float-checkable bound on the full domain.
        s = ex.spectral_filter(mu, m)
        assert 0.0 < s <= 1.0
        if m < ex.MAX_ORDER:
            assert ex.spectral_filter(mu, m + 1) >= s - 1e-15

    @given(
        st.floats(min_value=1e-9, max_value=10.0),
        st.integers(min_value=0, max_value=ex.MAX_ORDER),
    )
    def test_strictly_below_one_while_representable(self, mu, m):
        # for mu <= 10 the complement stays above ~1e-7 at every order,
        # far from the rounding cliff, so here the strict bound must hold
        assert ex.spectral_filter(mu, m) < 1.0

    @given(
        st.floats(min_value=1e-9, max_value=1e6),
        st.floats(min_value=1.0 + 1e-9, max_value=100.0),
        st.integers(min_value=0, max_value=10),
    )
    def test_monotone_in_mu(self, mu, factor, m):
        assert ex.spectral_filter(mu * factor, m) >= (
            ex.spectral_filter(mu, m) - 1e-15
        )

    def test_scalar_in_scalar_out(self):
        out = ex.spectral_filter(2.0, 3)
        assert isinstance(out, float)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ex.spectral_filter(-0.5, 1)
        with pytest.raises(ValueError):
            ex.spectral_filter_direct(np.array([1.0, -2.0]), 1)
