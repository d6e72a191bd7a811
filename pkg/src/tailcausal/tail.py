"""Rank standardization to unit Pareto scale and log-tail exceedance samples."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_beta, check_matrix
from .exceptions import EmptyTailError


@dataclass
class RawPanel:
    """Observations ``x`` (n x p) with optional raw proxy columns (n x d).

    ``latent`` optionally carries simulated latent drivers; it is never read
    from CSV and exists so experiments can feed them in as an oracle proxy.
    """

    x: np.ndarray
    proxy: np.ndarray | None = None
    columns: list[str] | None = None
    proxy_columns: list[str] | None = None
    latent: np.ndarray | None = None

    def __post_init__(self):
        self.x = check_matrix(self.x, "x", min_rows=2)
        n = self.x.shape[0]
        if self.proxy is not None:
            self.proxy = check_matrix(self.proxy, "proxy", min_rows=2, min_cols=0)
            if self.proxy.shape[0] != n:
                raise ValueError("proxy and x must have the same number of rows")
            if self.proxy.shape[1] == 0:
                self.proxy = None
        if self.latent is not None:
            self.latent = check_matrix(self.latent, "latent", min_rows=2, min_cols=0)
        if self.columns is None:
            self.columns = [f"X{j + 1}" for j in range(self.x.shape[1])]
        if self.proxy is not None and self.proxy_columns is None:
            self.proxy_columns = [f"P{r + 1}" for r in range(self.proxy.shape[1])]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def without_proxy(self) -> RawPanel:
        return RawPanel(self.x, None, list(self.columns), None, self.latent)

    def with_proxy(self, proxy: np.ndarray | None, names: list[str] | None = None) -> RawPanel:
        return RawPanel(self.x, proxy, list(self.columns), names, self.latent)

    def to_csv(self, path: str | Path, include_latent: bool = False) -> None:
        header = list(self.columns)
        blocks = [self.x]
        if self.proxy is not None:
            header += list(self.proxy_columns)
            blocks.append(self.proxy)
        if include_latent and self.latent is not None and self.latent.shape[1] > 0:
            header += [f"U{l + 1}" for l in range(self.latent.shape[1])]
            blocks.append(self.latent)
        data = np.hstack(blocks)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in data:
                writer.writerow([repr(float(v)) for v in row])


def read_panel_csv(path: str | Path, proxy_columns: Sequence[str] = (),
                   ignore_columns: Sequence[str] = ()) -> RawPanel:
    """Load a header-first CSV; columns named in ``proxy_columns`` become proxies.

    Missing or non-numeric cells raise ``ValueError``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    missing = [c for c in proxy_columns if c not in header]
    if missing:
        raise ValueError(f"proxy columns not found in header: {missing}")
    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() in {"na", "nan", "null"}:
                raise ValueError(f"{path}: missing value at row {i + 2}, column {header[j]!r}")
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at row {i + 2}") from None
    skip = set(ignore_columns)
    proxy_idx = [header.index(c) for c in proxy_columns]
    x_idx = [j for j, h in enumerate(header) if h not in set(proxy_columns) and h not in skip]
    proxy = values[:, proxy_idx] if proxy_idx else None
    return RawPanel(values[:, x_idx], proxy, [header[j] for j in x_idx],
                    list(proxy_columns) or None)


def rank_to_pareto(column) -> np.ndarray:
    """Map a sample to unit-Pareto pseudo-observations ``(n+1)/(n+1-rank)``.

    Ties are broken by original position, so the output is a permutation of
    ``(n+1)/n, ..., n+1`` and never infinite.
    """
    x = np.asarray(column, dtype=float)
    if x.ndim != 1:
        raise ValueError("rank_to_pareto expects a 1-D sample")
    if x.size == 0:
        raise ValueError("rank_to_pareto needs at least one value")
    if not np.all(np.isfinite(x)):
        raise ValueError("rank_to_pareto: non-finite input")
    return _pareto_columns(x[:, None])[:, 0]


def _pareto_columns(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    order = np.argsort(x, axis=0, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, n + 1)[:, None], axis=0)
    return (n + 1.0) / (n + 1.0 - ranks)


def threshold_from_beta(n: int, beta: float) -> float:
    """Pareto-scale threshold ``1/(1-q)`` for the quantile level ``q = 1 - n**beta/n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    beta = check_beta(beta)
    return float(n) / float(n) ** beta


def threshold_from_quantile(q_conf: float) -> float:
    if not 0.0 < q_conf < 1.0:
        raise ValueError("q_conf must lie in (0, 1)")
    return 1.0 / (1.0 - q_conf)


@dataclass(frozen=True)
class TailSample:
    z: np.ndarray
    u: float
    origin_rows: np.ndarray
    proxy: np.ndarray | None = None
    columns: list[str] | None = field(default=None, compare=False)
    proxy_columns: list[str] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.z.ndim != 2:
            raise ValueError("z must be 2-D")
        if self.u <= 1.0:
            raise ValueError("threshold u must exceed 1")
        if len(self.origin_rows) != self.z.shape[0]:
            raise ValueError("origin_rows must index every tail row")
        if self.proxy is not None and self.proxy.shape[0] != self.z.shape[0]:
            raise ValueError("proxy rows must match z rows")
        if self.z.shape[0] and not np.all(self.z.max(axis=1) > 0):
            raise ValueError("every tail row needs at least one positive coordinate")

    @property
    def k(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def d(self) -> int:
        return 0 if self.proxy is None else self.proxy.shape[1]

    @property
    def underdetermined(self) -> bool:
        """True when there are fewer tail rows than variables."""
        return self.k < self.p

    def without_proxy(self) -> TailSample:
        return TailSample(self.z, self.u, self.origin_rows, None, self.columns, None)

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "origin_rows": [int(i) for i in self.origin_rows],
            "columns": self.columns,
            "proxy_columns": self.proxy_columns,
            "z": self.z.tolist(),
            "proxy": None if self.proxy is None else self.proxy.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TailSample:
        proxy = data.get("proxy")
        return cls(
            z=np.asarray(data["z"], dtype=float).reshape(len(data["origin_rows"]), -1),
            u=float(data["u"]),
            origin_rows=np.asarray(data["origin_rows"], dtype=int),
            proxy=None if proxy is None else np.asarray(proxy, dtype=float),
            columns=data.get("columns"),
            proxy_columns=data.get("proxy_columns"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> TailSample:
        return cls.from_dict(json.loads(Path(path).read_text()))


def log_tail_coordinates(x: np.ndarray, u: float) -> np.ndarray:
    """Column-wise ``log Y - log u`` for rank-Pareto margins ``Y`` of ``x``."""
    return np.log(_pareto_columns(np.asarray(x, dtype=float))) - np.log(u)


def build_tail_sample(panel: RawPanel, beta: float = 0.7, transform_proxy: bool = True,
                      q_conf: float | None = None) -> TailSample:
    """Select rows where some margin exceeds the Pareto threshold and log-scale them.

    The threshold is ``n**(1-beta)`` unless ``q_conf`` is given, in which case it
    is ``1/(1-q_conf)``. Proxies are rank-transformed onto the same log-tail
    scale when ``transform_proxy`` is true, otherwise passed through.
    """
    u = threshold_from_quantile(q_conf) if q_conf is not None else threshold_from_beta(panel.n, beta)
    z_all = log_tail_coordinates(panel.x, u)
    keep = np.flatnonzero(z_all.max(axis=1) > 0)
    if keep.size == 0:
        raise EmptyTailError(f"no observation exceeds the threshold u={u:.4g}; raise beta or lower q_conf")
    proxy = None
    if panel.proxy is not None:
        proxy = log_tail_coordinates(panel.proxy, u) if transform_proxy else panel.proxy
        proxy = np.ascontiguousarray(proxy[keep])
    sample = TailSample(np.ascontiguousarray(z_all[keep]), u, keep, proxy,
                        list(panel.columns) if panel.columns else None,
                        list(panel.proxy_columns) if panel.proxy_columns else None)
    if sample.underdetermined:
        warnings.warn(f"only k={sample.k} tail rows for p={sample.p} variables; "
                      "nodewise regressions are under-determined", stacklevel=2)
    return sample


class TailTransformer(TransformerMixin, BaseEstimator):
    """Rank-Pareto log-tail coordinates ``log Y - log u`` for every row.

    ``transform`` keeps all rows so the output composes with other
    transformers; ``exceedance_mask`` marks the rows that form the tail sample.
    Ranks are always taken within the matrix being transformed.
    """

    def __init__(self, beta: float = 0.7, q_conf: float | None = None):
        self.beta = beta
        self.q_conf = q_conf

    def fit(self, X, y=None):
        X = check_matrix(X, "X", min_rows=2)
        self.n_features_in_ = X.shape[1]
        self.threshold_ = (threshold_from_quantile(self.q_conf) if self.q_conf is not None
                           else threshold_from_beta(X.shape[0], self.beta))
        return self

    def transform(self, X):
        check_is_fitted(self, "threshold_")
        X = check_matrix(X, "X", min_rows=1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return log_tail_coordinates(X, self.threshold_)

    def exceedance_mask(self, X) -> np.ndarray:
        return self.transform(X).max(axis=1) > 0
