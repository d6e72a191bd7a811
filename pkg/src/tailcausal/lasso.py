"""Cyclic coordinate descent for least squares with a masked L1 penalty.

Objective, with an always-present unpenalized intercept::

    (1/2k) * ||y - a - X b||^2 + lam * sum_{j penalized} |b_j|

Columns outside the penalty mask get exact univariate least-squares updates,
which is how proxy regressors enter the nodewise screening fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_positive

# Diagonal Gram entries at or below this are treated as constant columns.
_ZERO_VARIANCE = 1e-14


@dataclass
class LassoProblem:
    design: np.ndarray
    response: np.ndarray
    penalty_weight: float
    penalized_mask: np.ndarray | None = None
    tolerance: float = 1e-7
    max_sweeps: int = 10000

    def __post_init__(self):
        self.design = check_matrix(self.design, "design", min_rows=1, min_cols=0)
        self.response = np.asarray(self.response, dtype=float).ravel()
        if self.response.shape[0] != self.design.shape[0]:
            raise ValueError("design and response row counts differ")
        if not np.all(np.isfinite(self.response)):
            raise ValueError("response contains non-finite values")
        check_positive(self.penalty_weight, "penalty_weight", allow_zero=True)
        check_positive(self.tolerance, "tolerance")
        m = self.design.shape[1]
        if self.penalized_mask is None:
            self.penalized_mask = np.ones(m, dtype=bool)
        self.penalized_mask = np.asarray(self.penalized_mask, dtype=bool).ravel()
        if self.penalized_mask.shape[0] != m:
            raise ValueError("penalized_mask length must equal the number of columns")

    @property
    def k(self) -> int:
        return self.design.shape[0]


@dataclass
class LassoFit:
    coefficients: np.ndarray
    intercept: float
    sweeps_used: int
    converged: bool
    kkt_violation: float
    objective_history: np.ndarray | None = None


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _objective(gram, xty, yy, beta, lam, penalized):
    quad = 0.0
    m = beta.shape[0]
    for i in range(m):
        if beta[i] != 0.0:
            acc = 0.0
            for j in range(m):
                acc += gram[i, j] * beta[j]
            quad += beta[i] * (acc - 2.0 * xty[i])
    pen = 0.0
    for i in range(m):
        if penalized[i]:
            pen += abs(beta[i])
    return 0.5 * (yy + quad) + lam * pen


@njit(cache=True)
def _kkt_from_grad(grad, beta, lam, penalized, active):
    worst = 0.0
    for j in range(beta.shape[0]):
        if not active[j]:
            continue
        g = grad[j]
        if penalized[j]:
            if beta[j] > 0.0:
                v = abs(g - lam)
            elif beta[j] < 0.0:
                v = abs(g + lam)
            else:
                v = max(0.0, abs(g) - lam)
        else:
            v = abs(g)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _coordinate_descent(gram, xty, yy, lam, penalized, beta0, tol, max_sweeps, record):
    """Returns (beta, sweeps, converged, history).

    ``grad`` holds (1/k) X^T r for the current residual r and is updated in
    place after every coordinate move.
    """
    m = gram.shape[0]
    beta = beta0.copy()
    active = np.empty(m, dtype=np.bool_)
    for j in range(m):
        active[j] = gram[j, j] > _ZERO_VARIANCE
        if not active[j]:
            beta[j] = 0.0
    grad = xty - gram @ beta
    history = np.empty(max_sweeps + 1 if record else 1)
    if record:
        history[0] = _objective(gram, xty, yy, beta, lam, penalized)
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        for j in range(m):
            if not active[j]:
                continue
            gjj = gram[j, j]
            old = beta[j]
            rho = grad[j] + gjj * old
            if penalized[j]:
                new = _soft(rho, lam) / gjj
            else:
                new = rho / gjj
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for i in range(m):
                    grad[i] -= delta * gram[i, j]
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if record:
            history[sweeps] = _objective(gram, xty, yy, beta, lam, penalized)
        if max_delta < tol:
            # refresh to shed accumulated rounding before the stationarity test
            grad = xty - gram @ beta
            if _kkt_from_grad(grad, beta, lam, penalized, active) <= tol:
                converged = True
                break
    return beta, sweeps, converged, history[: sweeps + 1] if record else history[:0]


def _center(design: np.ndarray, response: np.ndarray):
    x_mean = design.mean(axis=0)
    y_mean = response.mean()
    xc = design - x_mean
    yc = response - y_mean
    return xc, yc, x_mean, y_mean


def objective(problem: LassoProblem, coefficients, intercept: float) -> float:
    r = problem.response - intercept - problem.design @ np.asarray(coefficients, dtype=float)
    pen = np.abs(np.asarray(coefficients)[problem.penalized_mask]).sum()
    return 0.5 * float(r @ r) / problem.k + problem.penalty_weight * pen


def kkt_violation(problem: LassoProblem, fit: LassoFit) -> float:
    """Largest subgradient stationarity residual over coefficients and intercept."""
    coef = np.asarray(fit.coefficients, dtype=float)
    r = problem.response - fit.intercept - problem.design @ coef
    k = problem.k
    grad = problem.design.T @ r / k
    lam = problem.penalty_weight
    pen = problem.penalized_mask
    viol = np.abs(grad).copy()
    nz = pen & (coef != 0)
    viol[nz] = np.abs(grad[nz] - lam * np.sign(coef[nz]))
    z = pen & (coef == 0)
    viol[z] = np.maximum(0.0, np.abs(grad[z]) - lam)
    # constant columns are pinned and carry no stationarity condition
    const = np.ptp(problem.design, axis=0) == 0 if problem.design.shape[0] else np.zeros(0, bool)
    viol[const] = 0.0
    worst = float(viol.max()) if viol.size else 0.0
    return max(worst, abs(float(r.mean())))


def fit_gram(gram: np.ndarray, xty: np.ndarray, yy: float, lam: float, penalized: np.ndarray,
             tol: float = 1e-7, max_sweeps: int = 10000, beta0: np.ndarray | None = None,
             record: bool = False):
    """Coordinate descent on precomputed centered moments ``X'X/k``, ``X'y/k``, ``y'y/k``."""
    m = gram.shape[0]
    start = np.zeros(m) if beta0 is None else np.asarray(beta0, dtype=float)
    return _coordinate_descent(np.ascontiguousarray(gram), np.ascontiguousarray(xty), float(yy),
                               float(lam), np.ascontiguousarray(penalized, dtype=np.bool_),
                               start, float(tol), int(max_sweeps), bool(record))


def fit(problem: LassoProblem, record_objective: bool = False) -> LassoFit:
    xc, yc, x_mean, y_mean = _center(problem.design, problem.response)
    k = problem.k
    gram = xc.T @ xc / k
    xty = xc.T @ yc / k
    yy = float(yc @ yc) / k
    beta, sweeps, converged, history = fit_gram(
        gram, xty, yy, problem.penalty_weight, problem.penalized_mask,
        problem.tolerance, problem.max_sweeps, record=record_objective)
    intercept = float(y_mean - x_mean @ beta)
    result = LassoFit(beta, intercept, int(sweeps), bool(converged), 0.0,
                      history + 0.0 if record_objective else None)
    result.kkt_violation = kkt_violation(problem, result)
    return result


class MaskedLasso(RegressorMixin, BaseEstimator):
    """Lasso whose L1 penalty applies only where ``penalized_mask`` is true.

    Parameters
    ----------
    alpha : float
        Penalty weight on the masked coefficients.
    penalized_mask : array-like of bool, optional
        One entry per feature; ``None`` penalizes everything.
    tol : float
        Convergence threshold on the per-sweep coefficient change and on the
        KKT residual.
    max_iter : int
        Maximum number of full coordinate sweeps.
    """

    def __init__(self, alpha: float = 1.0, penalized_mask=None, tol: float = 1e-7,
                 max_iter: int = 10000):
        self.alpha = alpha
        self.penalized_mask = penalized_mask
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        problem = LassoProblem(X, y, self.alpha, self.penalized_mask, self.tol, self.max_iter)
        result = fit(problem)
        self.coef_ = result.coefficients
        self.intercept_ = result.intercept
        self.n_iter_ = result.sweeps_used
        self.converged_ = result.converged
        self.kkt_violation_ = result.kkt_violation
        self.n_features_in_ = problem.design.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_matrix(X, "X", min_cols=0)
        return X @ self.coef_ + self.intercept_
