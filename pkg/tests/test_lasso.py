import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.linear_model import Lasso

from tailcausal.lasso import LassoFit, LassoProblem, MaskedLasso, fit, kkt_violation, objective


def orthonormal_design(rng, k, m):
    """Centered columns with ``X'X / k = I``."""
    a = rng.standard_normal((k, m))
    a -= a.mean(axis=0)
    q, _ = np.linalg.qr(a)
    return q * np.sqrt(k)


def active_set_oracle(x, y, lam, mask):
    """Exact minimizer by enumerating zero patterns and signs of penalized coordinates.

    Every candidate solves the stationarity system of a smooth quadratic, so
    the best feasible candidate is the global optimum of the convex problem.
    """
    k, m = x.shape
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    gram = xc.T @ xc / k
    xty = xc.T @ yc / k
    pen_idx = np.flatnonzero(mask)
    best = None
    for zero_mask in itertools.product([False, True], repeat=pen_idx.size):
        zeros = pen_idx[np.array(zero_mask, dtype=bool)] if pen_idx.size else np.array([], int)
        free = np.array([j for j in range(m) if j not in set(zeros)], dtype=int)
        free_pen = [j for j in free if mask[j]]
        for signs in itertools.product([-1.0, 1.0], repeat=len(free_pen)):
            s = np.zeros(m)
            s[free_pen] = signs
            b = np.zeros(m)
            if free.size:
                g = gram[np.ix_(free, free)]
                rhs = xty[free] - lam * s[free]
                try:
                    b[free] = np.linalg.solve(g, rhs)
                except np.linalg.LinAlgError:
                    continue
            intercept = y.mean() - x.mean(axis=0) @ b
            r = y - intercept - x @ b
            val = 0.5 * r @ r / k + lam * np.abs(b[mask]).sum()
            if best is None or val < best[0]:
                best = (val, b, intercept)
    return best


class TestClosedForms:
    def test_single_column_soft_threshold(self, rng):
        x = orthonormal_design(rng, 50, 1)
        y = 1.0 * x[:, 0] + 0.0
        res = fit(LassoProblem(x, y, 0.3))
        assert res.coefficients[0] == pytest.approx(0.7, abs=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_orthonormal_soft_threshold(self, seed):
        rng = np.random.default_rng(seed)
        k, m, lam = 80, 6, 0.25
        x = orthonormal_design(rng, k, m)
        y = x @ rng.normal(0, 1, m) + rng.normal(0, 0.5, k) + 3.0
        ols = x.T @ (y - y.mean()) / k
        expected = np.sign(ols) * np.maximum(np.abs(ols) - lam, 0.0)
        res = fit(LassoProblem(x, y, lam, tolerance=1e-12))
        np.testing.assert_allclose(res.coefficients, expected, atol=1e-8)

    def test_null_model(self, rng):
        x = rng.standard_normal((40, 4))
        y = rng.standard_normal(40)
        lam_max = np.max(np.abs((x - x.mean(0)).T @ (y - y.mean()) / 40))
        problem = LassoProblem(x, y, lam_max * 1.0001)
        res = fit(problem)
        assert np.all(res.coefficients == 0)
        assert res.intercept == pytest.approx(y.mean())
        assert kkt_violation(problem, res) < 1e-12

    def test_zero_variance_pinned(self, rng):
        x = np.column_stack([rng.standard_normal(30), np.full(30, 2.0)])
        y = x[:, 0] + rng.standard_normal(30)
        res = fit(LassoProblem(x, y, 0.01))
        assert res.coefficients[1] == 0.0
        assert res.converged


class TestOracles:
    @pytest.mark.parametrize("seed", range(6))
    def test_active_set_oracle_with_unpenalized(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((25, 3))
        y = x @ np.array([0.8, -0.3, 0.5]) + rng.standard_normal(25) * 0.4
        mask = np.array([True, True, False])
        problem = LassoProblem(x, y, 0.1, mask, tolerance=1e-12)
        res = fit(problem)
        best_val, best_b, _ = active_set_oracle(x, y, 0.1, mask)
        assert objective(problem, res.coefficients, res.intercept) == pytest.approx(best_val, abs=1e-5)
        np.testing.assert_allclose(res.coefficients, best_b, atol=1e-5)

    def test_grid_oracle_two_dims(self, rng):
        x = rng.standard_normal((30, 2))
        y = x @ np.array([1.2, -0.4]) + rng.standard_normal(30) * 0.5
        problem = LassoProblem(x, y, 0.2, np.array([True, False]))
        res = fit(problem)
        grid = np.arange(-2.0, 2.0001, 0.01)
        b1, b2 = np.meshgrid(grid, grid, indexing="ij")
        coefs = np.stack([b1.ravel(), b2.ravel()], axis=1)
        xc = x - x.mean(0)
        yc = y - y.mean()
        r = yc[None, :] - coefs @ xc.T
        vals = 0.5 * (r ** 2).mean(axis=1) + 0.2 * np.abs(coefs[:, 0])
        assert objective(problem, res.coefficients, res.intercept) <= vals.min() + 1e-12

    def test_matches_sklearn_when_fully_penalized(self, rng):
        x = rng.standard_normal((60, 5))
        y = x @ rng.normal(size=5) + rng.standard_normal(60)
        ours = MaskedLasso(alpha=0.05, tol=1e-12).fit(x, y)
        ref = Lasso(alpha=0.05, tol=1e-14, max_iter=100000).fit(x, y)
        np.testing.assert_allclose(ours.coef_, ref.coef_, atol=1e-6)
        assert ours.intercept_ == pytest.approx(ref.intercept_, abs=1e-6)


class TestKkt:
    @pytest.mark.parametrize("seed", range(20))
    def test_converged_fit_is_stationary(self, seed):
        rng = np.random.default_rng(seed)
        k, m = rng.integers(10, 80), rng.integers(1, 12)
        x = rng.standard_normal((k, m))
        y = rng.standard_normal(k)
        mask = rng.random(m) < 0.7
        problem = LassoProblem(x, y, float(rng.uniform(0.01, 0.5)), mask)
        res = fit(problem)
        assert res.converged
        assert kkt_violation(problem, res) <= 1e-7

    def test_perturbation_breaks_stationarity(self, rng):
        x = rng.standard_normal((50, 4))
        y = x[:, 0] + rng.standard_normal(50)
        problem = LassoProblem(x, y, 0.1)
        res = fit(problem)
        bumped = res.coefficients.copy()
        bumped[0] += 0.1
        assert kkt_violation(problem, LassoFit(bumped, res.intercept, 0, True, 0.0)) > 1e-3


class TestProperties:
    @given(st.integers(0, 10_000), st.floats(-50, 50))
    def test_response_shift_moves_only_intercept(self, seed, shift):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        mask = np.array([True, True, False, True])
        a = fit(LassoProblem(x, y, 0.1, mask, tolerance=1e-12))
        b = fit(LassoProblem(x, y + shift, 0.1, mask, tolerance=1e-12))
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-8)
        assert b.intercept - a.intercept == pytest.approx(shift, abs=1e-7)

    @given(st.integers(0, 10_000))
    def test_objective_monotone_across_sweeps(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((40, 8))
        x[:, 1] = x[:, 0] + 0.1 * rng.standard_normal(40)  # correlated columns need many sweeps
        y = rng.standard_normal(40)
        res = fit(LassoProblem(x, y, 0.02, rng.random(8) < 0.8), record_objective=True)
        hist = res.objective_history
        assert hist.size >= 2
        assert np.all(np.diff(hist) <= 1e-12 * np.maximum(1.0, np.abs(hist[:-1])))

    def test_max_sweeps_exhausted(self, rng):
        x = rng.standard_normal((40, 8))
        x[:, 1] = x[:, 0] + 1e-3 * rng.standard_normal(40)
        y = rng.standard_normal(40)
        res = fit(LassoProblem(x, y, 1e-4, max_sweeps=1))
        assert not res.converged
        assert res.sweeps_used == 1


def test_masked_lasso_estimator_api(rng):
    est = MaskedLasso(alpha=0.1, penalized_mask=[True, False])
    params = est.get_params()
    assert params["alpha"] == 0.1 and params["max_iter"] == 10000
    x = rng.standard_normal((30, 2))
    y = x @ [1.0, 2.0] + 0.5
    fitted = clone(est).fit(x, y)
    assert fitted.predict(x).shape == (30,)
    assert fitted.coef_[1] == pytest.approx(2.0, abs=0.1)
