"""Empirical tail prediction risk over max-linear envelope predictors.

The predictor class is ``h(z) = max(z, c) + d``. For a fixed ``c`` the best
``d`` is the median of ``z_j - max(z_i, c)``, so only ``c`` is searched on a
grid, refined around the incumbent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_beta, check_positive
from .simulate import sample_frechet
from .tail import log_tail_coordinates, threshold_from_beta

MIN_EXCEEDANCES = 100


@dataclass(frozen=True)
class RiskEstimate:
    risk: float
    argmin_offsets: tuple[float, float]
    conditioning_count: int
    grid_resolution: float
    stage_risks: tuple[float, ...] = ()


def _profile(zi: np.ndarray, zj: np.ndarray, cs: np.ndarray):
    """Risk and optimal shift for each candidate ``c``."""
    risks = np.empty(cs.size)
    shifts = np.empty(cs.size)
    for idx, c in enumerate(cs):
        resid = zj - np.maximum(zi, c)
        d = np.median(resid)
        shifts[idx] = d
        risks[idx] = np.abs(resid - d).mean()
    return risks, shifts


def empirical_tail_risk(zi, zj, coarse_points: int = 81, refine_points: int = 41,
                        stages: int = 4, final_step: float = 1e-3) -> RiskEstimate:
    """Minimum mean |zj - h(zi)| over envelope predictors, on rows with ``zi > 0``."""
    zi = np.asarray(zi, dtype=float)
    zj = np.asarray(zj, dtype=float)
    if zi.shape != zj.shape or zi.ndim != 1:
        raise ValueError("zi and zj must be 1-D of equal length")
    mask = zi > 0
    if not mask.any():
        raise ValueError("no conditioning rows with zi > 0")
    zi, zj = zi[mask], zj[mask]
    # c at or below min(zi) is the pure-shift predictor; above max(zi) it is constant
    lo, hi = float(zi.min()) - 2.0, float(zi.max()) + 2.0
    cs = np.linspace(lo, hi, coarse_points)
    step = cs[1] - cs[0]
    risks, shifts = _profile(zi, zj, cs)
    best = int(np.argmin(risks))
    best_c, best_d, best_risk = float(cs[best]), float(shifts[best]), float(risks[best])
    stage_risks = [best_risk]
    stage = 1
    while stage < stages or step > final_step:
        new_step = 2.0 * step / (refine_points - 1)
        cs = np.linspace(best_c - step, best_c + step, refine_points)
        risks, shifts = _profile(zi, zj, cs)
        idx = int(np.argmin(risks))
        if risks[idx] < best_risk:
            best_c, best_d, best_risk = float(cs[idx]), float(shifts[idx]), float(risks[idx])
        step = new_step
        stage_risks.append(best_risk)
        stage += 1
    return RiskEstimate(best_risk, (best_c, best_d), int(mask.sum()), step, tuple(stage_risks))


def envelope_risk_at(zi, zj, c: float, d: float) -> float:
    """Mean absolute error of ``max(zi, c) + d`` on rows with ``zi > 0``."""
    zi = np.asarray(zi, dtype=float)
    zj = np.asarray(zj, dtype=float)
    mask = zi > 0
    return float(np.abs(zj[mask] - np.maximum(zi[mask], c) - d).mean())


def simulate_pair(c: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``X1 = eps1``, ``X2 = max(c X1, eps2)``, Frechet(1) innovations, shape (n, 2)."""
    x1 = sample_frechet(n, rng)
    x2 = np.maximum(c * x1, sample_frechet(n, rng))
    return np.column_stack([x1, x2])


def pair_log_tail(x: np.ndarray, c: float, u: float, standardization: str = "rank") -> np.ndarray:
    """Log-tail coordinates of a simulated pair, by ranks or the exact marginal CDFs."""
    if standardization == "rank":
        return log_tail_coordinates(x, u)
    if standardization == "exact":
        # F1(x) = exp(-1/x), F2(x) = exp(-(c+1)/x)
        scale = np.array([1.0, c + 1.0])
        y = -1.0 / np.expm1(-scale / x)
        return np.log(y) - np.log(u)
    raise ValueError("standardization must be 'rank' or 'exact'")


def theorem1_experiment(c: float, n: int, beta: float = 0.7, seed: int = 0,
                        standardization: str = "rank") -> tuple[float, float]:
    """Forward (1 -> 2) and backward (2 -> 1) tail risks for the bivariate max-linear pair."""
    check_positive(c, "c")
    beta = check_beta(beta)
    if n < 10_000:
        raise ValueError("n must be at least 10^4")
    u = threshold_from_beta(n, beta)
    expected = n / u
    if expected < MIN_EXCEEDANCES:
        raise ValueError(f"only about {expected:.0f} exceedances per margin at beta={beta}; "
                         "raise beta or n")
    rng = np.random.default_rng(seed)
    z = pair_log_tail(simulate_pair(c, n, rng), c, u, standardization)
    forward = empirical_tail_risk(z[:, 0], z[:, 1]).risk
    backward = empirical_tail_risk(z[:, 1], z[:, 0]).risk
    return forward, backward
