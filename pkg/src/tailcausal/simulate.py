"""Recursive max-linear SEM data with Frechet(1) innovations, latent shocks and noisy proxies."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_int
from .graph import Dag, topological_order
from .tail import RawPanel

GRAPH_KINDS = ("barabasi-albert", "erdos-renyi")


@dataclass
class SimConfig:
    n: int = 1000
    p: int = 20
    graph_kind: str = "barabasi-albert"
    m: int = 1
    q_conf_count: int = 0
    conf_s: int = 0
    coef_edge_range: tuple[float, float] = (0.6, 0.9)
    coef_conf_range: tuple[float, float] = (0.5, 0.8)
    proxy_coef_range: tuple[float, float] = (0.6, 0.9)
    seed: int = 0

    def __post_init__(self):
        check_int(self.n, "n", minimum=2)
        check_int(self.p, "p", minimum=2)
        check_int(self.q_conf_count, "q_conf_count", minimum=0)
        check_int(self.conf_s, "conf_s", minimum=0)
        if self.conf_s > self.p:
            raise ValueError(f"conf_s={self.conf_s} exceeds p={self.p}")
        if self.graph_kind not in GRAPH_KINDS:
            raise ValueError(f"graph_kind must be one of {GRAPH_KINDS}")
        if not 1 <= self.m < self.p:
            raise ValueError(f"m must satisfy 1 <= m < p, got m={self.m}")
        for name in ("coef_edge_range", "coef_conf_range", "proxy_coef_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi < np.inf:
                raise ValueError(f"{name} must be a positive interval, got {(lo, hi)}")
            setattr(self, name, (float(lo), float(hi)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimTruth:
    dag: Dag
    edge_coefs: dict[tuple[int, int], float]
    conf_exposure: list[list[int]] = field(default_factory=list)
    conf_coefs: dict[tuple[int, int], float] = field(default_factory=dict)
    proxy_coefs: list[float] = field(default_factory=list)

    def confounded_pairs(self) -> set[tuple[int, int]]:
        pairs = set()
        for nodes in self.conf_exposure:
            s = sorted(nodes)
            for a in range(len(s)):
                for b in range(a + 1, len(s)):
                    pairs.add((s[a], s[b]))
        return pairs

    def to_dict(self) -> dict:
        return {
            "p": self.dag.p,
            "edges": [list(e) for e in self.dag.edges()],
            "edge_coefs": [[s, t, c] for (s, t), c in sorted(self.edge_coefs.items())],
            "conf_exposure": [sorted(int(v) for v in nodes) for nodes in self.conf_exposure],
            "conf_coefs": [[l, j, b] for (l, j), b in sorted(self.conf_coefs.items())],
            "proxy_coefs": list(self.proxy_coefs),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SimTruth:
        dag = Dag(int(data["p"]), [tuple(e) for e in data["edges"]])
        edge_coefs = {(int(s), int(t)): float(c) for s, t, c in data.get("edge_coefs", [])}
        if not edge_coefs:
            edge_coefs = {e: float("nan") for e in dag.edges()}
        return cls(
            dag=dag,
            edge_coefs=edge_coefs,
            conf_exposure=[list(map(int, nodes)) for nodes in data.get("conf_exposure", [])],
            conf_coefs={(int(l), int(j)): float(b) for l, j, b in data.get("conf_coefs", [])},
            proxy_coefs=[float(a) for a in data.get("proxy_coefs", [])],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> SimTruth:
        return cls.from_dict(json.loads(Path(path).read_text()))


def sample_frechet(count: int, rng: np.random.Generator) -> np.ndarray:
    """Standard Frechet draws ``-1/log(U)`` by inversion."""
    return frechet_from_uniform(rng.random(count))


def frechet_from_uniform(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    # rng.random() can return exactly 0; nudge into the open interval
    u = np.clip(u, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    return -1.0 / np.log(u)


def gen_dag(config: SimConfig, rng: np.random.Generator) -> Dag:
    """Random DAG: preferential attachment or Erdos-Renyi, oriented by node order."""
    p, m = config.p, config.m
    if not 1 <= m < p:
        raise ValueError(f"m must satisfy 1 <= m < p, got m={m}")
    edges: list[tuple[int, int]] = []
    if config.graph_kind == "barabasi-albert":
        degree = np.zeros(p)
        for t in range(1, p):
            weights = degree[:t] + 1.0
            targets = rng.choice(t, size=min(m, t), replace=False, p=weights / weights.sum())
            for s in sorted(targets.tolist()):
                edges.append((s, t))
                degree[s] += 1
                degree[t] += 1
    else:
        prob = 2.0 * m / (p - 1)
        if prob > 1:
            raise ValueError(f"edge probability 2m/(p-1)={prob:.3f} exceeds 1")
        draws = rng.random((p, p))
        for i in range(p):
            for j in range(i + 1, p):
                if draws[i, j] < prob:
                    edges.append((i, j))
    return Dag(p, edges)


def simulate(config: SimConfig) -> tuple[RawPanel, SimTruth]:
    """Draw a graph, coefficients and ``n`` rows of the max-linear recursion.

    Returns the panel with observed proxies ``P_l = max(a_l U_l, eta_l)`` in
    ``proxy`` and the latent drivers ``U`` in ``latent``.
    """
    rng = np.random.default_rng(config.seed)
    dag = gen_dag(config, rng)
    n, p, q = config.n, config.p, config.q_conf_count

    lo, hi = config.coef_edge_range
    edge_coefs = {e: float(rng.uniform(lo, hi)) for e in dag.edges()}
    exposure: list[list[int]] = []
    conf_coefs: dict[tuple[int, int], float] = {}
    lo, hi = config.coef_conf_range
    for l in range(q):
        nodes = sorted(rng.choice(p, size=config.conf_s, replace=False).tolist())
        exposure.append(nodes)
        for j in nodes:
            conf_coefs[(l, j)] = float(rng.uniform(lo, hi))
    lo, hi = config.proxy_coef_range
    proxy_coefs = [float(rng.uniform(lo, hi)) for _ in range(q)]

    eps = sample_frechet(n * p, rng).reshape(n, p)
    latent = sample_frechet(n * q, rng).reshape(n, q)
    eta = sample_frechet(n * q, rng).reshape(n, q)

    x = eps.copy()
    for (l, j), b in conf_coefs.items():
        np.maximum(x[:, j], b * latent[:, l], out=x[:, j])
    for j in topological_order(dag):
        for i in dag.parents[j]:
            np.maximum(x[:, j], edge_coefs[(i, j)] * x[:, i], out=x[:, j])

    proxy = np.maximum(np.asarray(proxy_coefs) * latent, eta) if q else None
    panel = RawPanel(x, proxy, latent=latent)
    truth = SimTruth(dag, edge_coefs, exposure, conf_coefs, proxy_coefs)
    return panel, truth
