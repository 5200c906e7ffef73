"""Objectives, feasible-set oracles, and instance generators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from richext import problems as pr


def fd_gradient(func, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        out[j] = (func(x + e) - func(x - e)) / (2 * step)
    return out


def random_problems(seed=0):
    rng = np.random.default_rng(seed)
    logistic = pr.gen_logistic(40, 7, 1.0 / np.arange(1, 8), seed)
    quad = pr.QuadraticProblem(rng.uniform(0.1, 2.0, 6),
                               rng.standard_normal(6))
    lsq, _ = pr.gen_penalized_lasso(30, 9, seed)
    robust, _ = pr.gen_robust_dual(20, 8, seed)
    return [logistic, quad, lsq, robust]


class TestGradients:
    @pytest.mark.parametrize("idx", range(4))
    def test_against_central_differences(self, idx):
        problem = random_problems()[idx]
        rng = np.random.default_rng(idx + 10)
        for _ in range(5):
            x = rng.standard_normal(problem.dim)
            grad = problem.gradient(x)
            fd = fd_gradient(problem.value, x)
            np.testing.assert_allclose(grad, fd, rtol=2e-6, atol=1e-9)

    @pytest.mark.parametrize("idx", range(4))
    def test_value_and_grad_consistent(self, idx):
        problem = random_problems()[idx]
        x = np.random.default_rng(idx).standard_normal(problem.dim)
        v, g = problem.value_and_grad(x)
        assert v == pytest.approx(problem.value(x), rel=1e-12)
        np.testing.assert_allclose(g, problem.gradient(x), rtol=1e-12)


class TestLogistic:
    def test_value_at_zero_is_log_two(self):
        problem = pr.gen_logistic(50, 4, np.ones(4), 1)
        assert problem.value(np.zeros(4)) == pytest.approx(np.log(2.0))

    def test_smoothness_is_quarter_of_gram_top(self):
        problem = pr.gen_logistic(30, 5, np.ones(5), 2)
        gram = problem.features.T @ problem.features / problem.n
        top = np.linalg.eigvalsh(gram).max()
        assert problem.smoothness == pytest.approx(top / 4.0, rel=1e-12)

    def test_gradient_descent_descends(self):
        problem = pr.gen_logistic(60, 6, np.ones(6), 3)
        x = np.zeros(6)
        vals = [problem.value(x)]
        for _ in range(20):
            x = x - problem.gradient(x) / problem.smoothness
            vals.append(problem.value(x))
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_huge_margins_stay_finite(self):
        problem = pr.gen_logistic(20, 3, np.ones(3), 4)
        x = np.full(3, 1e4)
        assert np.isfinite(problem.value(x))
        assert np.all(np.isfinite(problem.gradient(x)))

    def test_labels_are_plus_minus_one(self):
        problem = pr.gen_logistic(100, 5, np.ones(5), 5)
        assert set(np.unique(problem.labels)) <= {-1.0, 1.0}


class TestQuadratic:
    def test_optimum_and_value(self):
        eigs = np.array([2.0, 1.0, 0.5])
        x_star = np.array([1.0, -1.0, 3.0])
        problem = pr.QuadraticProblem(eigs, x_star)
        assert problem.value(x_star) == 0.0
        assert problem.f_star == 0.0
        delta = np.array([1.0, 0.0, 0.0])
        assert problem.value(x_star + delta) == pytest.approx(1.0)

    def test_rejects_nonpositive_eigenvalues(self):
        with pytest.raises(ValueError):
            pr.QuadraticProblem(np.array([1.0, 0.0]), np.zeros(2))


class TestRobustDual:
    def test_dimension_is_sample_count(self):
        problem, oracle = pr.gen_robust_dual(15, 6, 0)
        assert problem.dim == 15
        assert oracle.kind == "box-linf"

    def test_default_regularization(self):
        problem, _ = pr.gen_robust_dual(25, 4, 0)
        assert problem.lam_reg == pytest.approx(0.2)

    def test_regularization_override(self):
        problem, _ = pr.gen_robust_dual(25, 4, 0, lam_reg=0.07)
        assert problem.lam_reg == pytest.approx(0.07)


class TestL1Ball:
    def setup_method(self):
        self.oracle = pr.L1BallOracle(radius=2.5)

    def test_lmo_is_signed_extreme_point(self):
        g = np.array([0.3, -4.0, 1.0])
        v = self.oracle.lmo(g)
        np.testing.assert_array_equal(v, [0.0, 2.5, 0.0])

    def test_lmo_tie_breaks_on_lowest_index(self):
        v = self.oracle.lmo(np.array([2.0, -2.0]))
        np.testing.assert_array_equal(v, [-2.5, 0.0])

    @given(st.integers(min_value=1, max_value=6),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=60)
    def test_lmo_beats_every_vertex(self, dim, seed):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal(dim)
        best = min(float(g @ v) for v in self.oracle.vertices(dim))
        assert float(g @ self.oracle.lmo(g)) == pytest.approx(best, abs=1e-12)

    def test_make_feasible_rescales_onto_ball(self):
        x = np.array([3.0, -3.0])
        y = self.oracle.make_feasible(x)
        assert np.abs(y).sum() == pytest.approx(2.5)
        np.testing.assert_allclose(y, x * (2.5 / 6.0))
        inside = np.array([0.5, 0.5])
        np.testing.assert_array_equal(self.oracle.make_feasible(inside),
                                      inside)

    @given(st.integers(min_value=1, max_value=8),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=60)
    def test_projection_is_optimal_among_samples(self, dim, seed):
        # KKT-free check: the projection must be feasible and at least as
        # close as any random feasible candidate.
        rng = np.random.default_rng(seed)
        x = 3.0 * rng.standard_normal(dim)
        p = self.oracle.project(x)
        assert self.oracle.contains(p)
        d_p = float(np.sum((x - p) ** 2))
        for _ in range(20):
            z = rng.standard_normal(dim)
            z = self.oracle.make_feasible(z * rng.uniform(0, 3))
            assert d_p <= float(np.sum((x - z) ** 2)) + 1e-9

    def test_projection_fixes_interior_points(self):
        x = np.array([0.25, -0.3, 0.1])
        np.testing.assert_allclose(self.oracle.project(x), x, atol=1e-12)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            pr.L1BallOracle(radius=0.0)


class TestBox:
    def setup_method(self):
        self.oracle = pr.BoxOracle()

    def test_lmo_hits_opposite_corner(self):
        g = np.array([1.0, -2.0, 0.0])
        v = self.oracle.lmo(g)
        np.testing.assert_array_equal(v, [-1.0, 1.0, -1.0])

    def test_lmo_beats_every_vertex(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            g = rng.standard_normal(4)
            best = min(float(g @ v) for v in self.oracle.vertices(4))
            assert float(g @ self.oracle.lmo(g)) <= best + 1e-12

    def test_project_clips(self):
        x = np.array([2.0, -0.5, -9.0])
        np.testing.assert_array_equal(self.oracle.project(x),
                                      [1.0, -0.5, -1.0])

    def test_contains(self):
        assert self.oracle.contains(np.array([1.0, -1.0]))
        assert not self.oracle.contains(np.array([1.0 + 1e-6, 0.0]))


class TestL1Projection:
    def test_matches_sorted_cumsum_construction(self):
        # tiny case worked out by hand: project (3, 1) onto radius-2 ball:
        # threshold tau = 1, result (2, 0)
        out = pr.l1_ball_projection(np.array([3.0, 1.0]), 2.0)
        np.testing.assert_allclose(out, [2.0, 0.0])

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(7) * 2.0
        once = pr.l1_ball_projection(x, 1.5)
        twice = pr.l1_ball_projection(once, 1.5)
        np.testing.assert_allclose(once, twice, atol=1e-12)
        assert np.abs(once).sum() <= 1.5 + 1e-12


class TestGenerators:
    def test_logistic_spectrum_shapes_covariance(self):
        spectrum = 1.0 / np.arange(1, 9)
        problem = pr.gen_logistic(20_000, 8, spectrum, 0)
        emp = np.var(problem.features, axis=0)
        np.testing.assert_allclose(emp, spectrum, rtol=0.1)

    def test_deterministic_in_seed(self):
        a1, o1 = pr.gen_fw_lasso(30, 10, 7)
        a2, o2 = pr.gen_fw_lasso(30, 10, 7)
        np.testing.assert_array_equal(a1.features, a2.features)
        np.testing.assert_array_equal(a1.labels, a2.labels)
        assert o1.radius == o2.radius
        h1, w1 = pr.gen_penalized_lasso(30, 10, 7)
        h2, w2 = pr.gen_penalized_lasso(30, 10, 7)
        np.testing.assert_array_equal(h1.response, h2.response)
        assert w1 == w2

    def test_fw_lasso_radius_default_is_half_pilot_norm(self):
        problem, oracle = pr.gen_fw_lasso(40, 12, 3)
        assert oracle.radius > 0
        problem2, oracle2 = pr.gen_fw_lasso(40, 12, 3, radius=1.0)
        assert oracle2.radius == 1.0
        np.testing.assert_array_equal(problem.features, problem2.features)

    def test_penalized_lasso_weight_below_shutoff(self):
        h, weight = pr.gen_penalized_lasso(50, 20, 11)
        shutoff = np.abs(h.features.T @ h.response).max() / h.n
        assert 0 < weight < shutoff


class TestDatasetRoundTrip:
    def test_save_load(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        path = tmp_path / "data.csv"
        pr.save_dataset(path, X, y)
        X2, y2 = pr.load_dataset(path)
        np.testing.assert_array_equal(X, X2)
        np.testing.assert_array_equal(y, y2)
