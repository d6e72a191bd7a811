"""Stage 1: proxy-adjusted nodewise Lasso on log-tail coordinates and OR-rule skeleton."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_open_unit, check_positive
from .graph import Skeleton
from .lasso import fit_gram
from .tail import TailSample


@dataclass
class ScreenConfig:
    lambda_multiplier: float = 1.0
    tau_ratio: float = 0.5
    per_node_lambda: list[float] | None = None
    tolerance: float = 1e-7
    max_sweeps: int = 10000

    def __post_init__(self):
        check_positive(self.lambda_multiplier, "lambda_multiplier")
        check_open_unit(self.tau_ratio, "tau_ratio")
        if self.per_node_lambda is not None:
            for lam in self.per_node_lambda:
                check_positive(lam, "per_node_lambda entry", allow_zero=True)

    def lambdas(self, p: int, k: int) -> np.ndarray:
        if self.per_node_lambda is not None:
            lam = np.asarray(self.per_node_lambda, dtype=float)
            if lam.shape != (p,):
                raise ValueError(f"per_node_lambda needs {p} entries, got {lam.shape}")
            return lam
        return np.full(p, default_lambda(self.lambda_multiplier, p, k))


def default_lambda(multiplier: float, p: int, k: int) -> float:
    """``C * sqrt(log p / k)``."""
    return multiplier * np.sqrt(np.log(p) / k)


@dataclass
class NodewiseResult:
    beta: np.ndarray
    gamma: np.ndarray
    intercept: np.ndarray
    lambdas: np.ndarray
    converged: np.ndarray
    sweeps: np.ndarray = field(repr=False)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def coefficient_rows(self):
        """Yield ``(j, l, beta_jl)`` for every off-diagonal entry."""
        for j in range(self.p):
            for l in range(self.p):
                if j != l:
                    yield j, l, float(self.beta[j, l])

    def write_csv(self, path: str | Path, labels: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j", "l", "beta_jl"])
            for j, l, b in self.coefficient_rows():
                if labels is not None:
                    writer.writerow([labels[j], labels[l], repr(b)])
                else:
                    writer.writerow([j, l, repr(b)])


def nodewise_fit(sample: TailSample, config: ScreenConfig | None = None) -> NodewiseResult:
    """Regress each ``Z_j`` on the other tail coordinates plus unpenalized proxies.

    All p problems share one centered second-moment matrix of ``[Z | P]``; the
    problem for node j drops row/column j from it.
    """
    return nodewise_fit_arrays(sample.z, sample.proxy, config or ScreenConfig())


def nodewise_fit_arrays(z: np.ndarray, proxy: np.ndarray | None,
                        config: ScreenConfig) -> NodewiseResult:
    k, p = z.shape
    d = 0 if proxy is None else proxy.shape[1]
    if k < 2:
        raise ValueError("need at least two tail rows")
    if d and d >= k:
        raise ValueError(f"proxy dimension d={d} must be smaller than k={k}")
    full = z if proxy is None else np.hstack([z, proxy])
    centered = full - full.mean(axis=0)
    moments = centered.T @ centered / k
    lambdas = config.lambdas(p, k)

    beta = np.zeros((p, p))
    gamma = np.zeros((p, d))
    intercept = np.zeros(p)
    converged = np.zeros(p, dtype=bool)
    sweeps = np.zeros(p, dtype=int)
    means = full.mean(axis=0)
    for j in range(p):
        others = np.r_[np.arange(j), np.arange(j + 1, p + d)]
        gram = moments[np.ix_(others, others)]
        xty = moments[others, j]
        penalized = others < p
        coef, used, ok, _ = fit_gram(gram, xty, moments[j, j], lambdas[j], penalized,
                                     config.tolerance, config.max_sweeps)
        beta[j, others[penalized]] = coef[penalized]
        gamma[j] = coef[~penalized]
        intercept[j] = means[j] - means[others] @ coef
        converged[j] = ok
        sweeps[j] = used
    if not converged.all():
        bad = np.flatnonzero(~converged).tolist()
        warnings.warn(f"nodewise Lasso did not converge for nodes {bad}; "
                      "their coefficients are still used for screening", stacklevel=2)
    return NodewiseResult(beta, gamma, intercept, lambdas, converged, sweeps)


def build_skeleton(result: NodewiseResult, tau) -> Skeleton:
    """Edge ``{j, l}`` whenever ``|beta[j, l]|`` or ``|beta[l, j]|`` exceeds the threshold.

    ``tau`` may be a scalar or a per-node vector applied to the rows of ``beta``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    keep = np.abs(result.beta) > (tau[:, None] if tau.ndim == 1 else tau)
    np.fill_diagonal(keep, False)
    keep = keep | keep.T
    rows, cols = np.nonzero(np.triu(keep, 1))
    return Skeleton(result.p, zip(rows.tolist(), cols.tolist()))


def screen(sample: TailSample, config: ScreenConfig | None = None) -> tuple[Skeleton, NodewiseResult]:
    """Nodewise fit followed by the OR rule at ``tau = tau_ratio * lambda``."""
    config = config or ScreenConfig()
    result = nodewise_fit(sample, config)
    return build_skeleton(result, config.tau_ratio * result.lambdas), result


def _screen_arrays(z, proxy, config):
    result = nodewise_fit_arrays(z, proxy, config)
    return build_skeleton(result, config.tau_ratio * result.lambdas), result


class SkeletonScreen(BaseEstimator):
    """Estimator wrapper around :func:`screen` operating on log-tail coordinates.

    ``fit(Z, proxy=None)`` takes an already-selected tail sample ``Z`` (k x p)
    and sets ``skeleton_``, ``coef_`` (p x p, row j regresses node j),
    ``proxy_coef_`` and ``lambda_``.
    """

    def __init__(self, lambda_multiplier: float = 1.0, tau_ratio: float = 0.5,
                 tol: float = 1e-7, max_iter: int = 10000):
        self.lambda_multiplier = lambda_multiplier
        self.tau_ratio = tau_ratio
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, Z, y=None, proxy=None):
        Z = check_matrix(Z, "Z", min_rows=2, min_cols=2)
        if proxy is not None:
            proxy = check_matrix(proxy, "proxy", min_rows=2)
            if proxy.shape[0] != Z.shape[0]:
                raise ValueError("proxy and Z must have the same number of rows")
        config = ScreenConfig(self.lambda_multiplier, self.tau_ratio, None, self.tol, self.max_iter)
        self.skeleton_, self.nodewise_ = _screen_arrays(Z, proxy, config)
        self.coef_ = self.nodewise_.beta
        self.proxy_coef_ = self.nodewise_.gamma
        self.lambda_ = float(self.nodewise_.lambdas[0])
        self.n_features_in_ = Z.shape[1]
        return self

    def adjacency(self) -> np.ndarray:
        check_is_fitted(self, "skeleton_")
        adj = np.zeros((self.n_features_in_,) * 2, dtype=bool)
        for i, j in self.skeleton_:
            adj[i, j] = adj[j, i] = True
        return adj
