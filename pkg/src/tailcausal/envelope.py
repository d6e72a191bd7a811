"""Quantile offsets, max-linear envelope prediction, SAE and the EBIC nodewise score."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._validation import check_open_unit, check_positive, check_vector
from .graph import Dag
from .tail import TailSample

SAE_FLOOR_FACTOR = 1e-9


def empirical_quantile(values, q: float) -> float:
    """Linear-interpolation sample quantile (R type 7)."""
    arr = check_vector(values, "values")
    q = check_open_unit(q, "q")
    return float(np.quantile(arr, q, method="linear"))


@dataclass
class OffsetTable:
    """Quantile offsets keyed by ``(source, target)``, ``(proxy, target)`` and target."""

    quantile_q: float
    pair_offsets: dict[tuple[int, int], float] = field(default_factory=dict)
    proxy_offsets: dict[tuple[int, int], float] = field(default_factory=dict)
    base: dict[int, float] = field(default_factory=dict)

    def update(self, other: OffsetTable) -> None:
        if other.quantile_q != self.quantile_q:
            raise ValueError("cannot merge offset tables with different quantile levels")
        self.pair_offsets.update(other.pair_offsets)
        self.proxy_offsets.update(other.proxy_offsets)
        self.base.update(other.base)


def compute_offsets(sample: TailSample, j: int, pa: Iterable[int], q: float) -> OffsetTable:
    """Offsets for node ``j``: one per parent, one per proxy column and the base ``c_0``."""
    q = check_open_unit(q, "q")
    pa = sorted(set(pa))
    if j in pa:
        raise ValueError("a node cannot be its own parent")
    zj = sample.z[:, j]
    table = OffsetTable(q)
    table.base[j] = float(np.quantile(zj, q))
    if pa:
        diffs = zj[:, None] - sample.z[:, pa]
        for l, c in zip(pa, np.quantile(diffs, q, axis=0)):
            table.pair_offsets[(l, j)] = float(c)
    if sample.proxy is not None:
        diffs = zj[:, None] - sample.proxy
        for r, c in enumerate(np.quantile(diffs, q, axis=0)):
            table.proxy_offsets[(r, j)] = float(c)
    return table


def predict_envelope(sample: TailSample, j: int, pa: Iterable[int], offsets: OffsetTable) -> np.ndarray:
    """Pointwise max of ``c_0``, every ``z_l + c_{l->j}`` and every ``p_r + c_{r->j}``."""
    try:
        pred = np.full(sample.k, offsets.base[j])
        for l in pa:
            np.maximum(pred, sample.z[:, l] + offsets.pair_offsets[(l, j)], out=pred)
        for r in range(sample.d):
            np.maximum(pred, sample.proxy[:, r] + offsets.proxy_offsets[(r, j)], out=pred)
    except KeyError as exc:
        raise KeyError(f"offset table has no entry {exc.args[0]!r} for node {j}") from None
    return pred


def sae(actual, predicted) -> float:
    """Sum of absolute envelope residuals."""
    a = np.asarray(actual, dtype=float)
    b = np.asarray(predicted, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


@dataclass(frozen=True)
class NodeScore:
    sae: float
    fit_term: float
    penalty_term: float
    total: float
    parent_count: int


def ebic_penalty(k: int, parent_count: int, gamma_ebic: float, p: int) -> float:
    return 0.5 * (math.log(k) + 2.0 * gamma_ebic * math.log(p)) * parent_count


def node_score(sae_value: float, k: int, parent_count: int, gamma_ebic: float, p: int,
               sae_floor: float | None = None) -> NodeScore:
    """``(k/2) log(SAE/k) + (1/2)(log k + 2 gamma log p) |pa|``; proxies never count as parents."""
    if k < 1:
        raise ValueError("k must be at least 1")
    floor = SAE_FLOOR_FACTOR * k if sae_floor is None else sae_floor
    if sae_value < floor:
        warnings.warn(f"SAE {sae_value:.3g} below floor; clamped to {floor:.3g}", stacklevel=2)
        sae_value = floor
    fit_term = 0.5 * k * math.log(sae_value / k)
    penalty = ebic_penalty(k, parent_count, gamma_ebic, p)
    return NodeScore(float(sae_value), fit_term, penalty, fit_term + penalty, int(parent_count))


class EnvelopeScorer:
    """Cached nodewise scores over one tail sample.

    Pair offsets depend only on the sample, so they are computed once per
    ``(source, target)`` and never invalidated. Each node's base envelope
    (``c_0`` and the proxy terms) is likewise fixed, and local scores are
    memoized by ``(node, parent set)``.
    """

    def __init__(self, sample: TailSample, q: float = 0.05, gamma_ebic: float = 10.0):
        self.sample = sample
        self.q = check_open_unit(q, "q")
        self.gamma_ebic = check_positive(gamma_ebic, "gamma_ebic", allow_zero=True)
        self.offsets = OffsetTable(self.q)
        self._base_env: dict[int, np.ndarray] = {}
        self._scores: dict[tuple[int, frozenset], NodeScore] = {}

    @property
    def p(self) -> int:
        return self.sample.p

    @property
    def k(self) -> int:
        return self.sample.k

    def _ensure(self, j: int, pa: Iterable[int]) -> None:
        missing = [l for l in pa if (l, j) not in self.offsets.pair_offsets]
        if j not in self.offsets.base or missing:
            table = compute_offsets(self.sample, j, missing, self.q)
            if j in self.offsets.base:
                table.base.pop(j)
                table.proxy_offsets.clear()
            self.offsets.update(table)

    def base_envelope(self, j: int) -> np.ndarray:
        env = self._base_env.get(j)
        if env is None:
            self._ensure(j, ())
            env = predict_envelope(self.sample, j, (), self.offsets)
            env.setflags(write=False)
            self._base_env[j] = env
        return env

    def envelope(self, j: int, pa: Iterable[int]) -> np.ndarray:
        pa = tuple(pa)
        self._ensure(j, pa)
        pred = self.base_envelope(j).copy()
        z = self.sample.z
        for l in pa:
            np.maximum(pred, z[:, l] + self.offsets.pair_offsets[(l, j)], out=pred)
        return pred

    def local_score(self, j: int, pa: Iterable[int]) -> NodeScore:
        key = (j, frozenset(pa))
        score = self._scores.get(key)
        if score is None:
            pred = self.envelope(j, sorted(key[1]))
            value = sae(self.sample.z[:, j], pred)
            score = node_score(value, self.k, len(key[1]), self.gamma_ebic, self.p)
            self._scores[key] = score
        return score

    def total_score(self, dag: Dag) -> float:
        if dag.p != self.p:
            raise ValueError("graph and sample dimensions differ")
        return float(sum(self.local_score(j, dag.parents[j]).total for j in range(dag.p)))
