"""Directed acyclic graphs and undirected skeletons over dense 0-based node ids."""

from __future__ import annotations

import json
import operator
from collections import deque
from typing import Iterable, Iterator

from .exceptions import GraphInvariantError


def _check_node(p: int, node: int) -> int:
    try:
        node = operator.index(node)
    except TypeError:
        raise ValueError(f"node id must be an integer, got {node!r}") from None
    if node < 0 or node >= p:
        raise ValueError(f"node id {node} out of range [0, {p})")
    return node


class Dag:
    """Mutable DAG stored as per-node ordered parent lists.

    Every mutator keeps the graph acyclic, loop-free and free of duplicate
    parents; an operation that would break one of these raises ``ValueError``
    and leaves the graph untouched.
    """

    def __init__(self, p: int, edges: Iterable[tuple[int, int]] = ()):
        if p < 0:
            raise ValueError("p must be non-negative")
        self.p = int(p)
        self.parents: list[list[int]] = [[] for _ in range(self.p)]
        self.edge_count = 0
        for source, target in edges:
            self.add_edge(source, target)

    # -- queries -----------------------------------------------------------

    def has_edge(self, source: int, target: int) -> bool:
        return source in self.parents[target]

    def in_degree(self, node: int) -> int:
        return len(self.parents[node])

    def edges(self) -> list[tuple[int, int]]:
        """All edges as sorted ``(source, target)`` pairs."""
        return sorted((s, t) for t in range(self.p) for s in self.parents[t])

    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.p)]
        for t in range(self.p):
            for s in self.parents[t]:
                out[s].append(t)
        return out

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.edges())

    def __len__(self) -> int:
        return self.edge_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.p == other.p and self.edges() == other.edges()

    def __repr__(self) -> str:
        return f"Dag(p={self.p}, edges={self.edges()})"

    def copy(self) -> Dag:
        new = Dag(self.p)
        new.parents = [list(pa) for pa in self.parents]
        new.edge_count = self.edge_count
        return new

    def parent_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(pa) for pa in self.parents)

    # -- mutation ----------------------------------------------------------

    def add_edge(self, source: int, target: int) -> None:
        source = _check_node(self.p, source)
        target = _check_node(self.p, target)
        if source == target:
            raise ValueError(f"self-loop {source}->{source} not allowed")
        if self.has_edge(source, target):
            raise ValueError(f"edge {source}->{target} already present")
        if would_create_cycle(self, source, target):
            raise ValueError(f"edge {source}->{target} would create a cycle")
        self.parents[target].append(source)
        self.edge_count += 1

    def remove_edge(self, source: int, target: int) -> None:
        if not self.has_edge(source, target):
            raise ValueError(f"edge {source}->{target} not present")
        self.parents[target].remove(source)
        self.edge_count -= 1

    def reverse_edge(self, source: int, target: int) -> None:
        self.remove_edge(source, target)
        try:
            self.add_edge(target, source)
        except ValueError:
            self.parents[target].append(source)
            self.edge_count += 1
            raise

    def validate(self) -> None:
        """Raise ``GraphInvariantError`` if any structural invariant is broken."""
        total = 0
        for j, pa in enumerate(self.parents):
            if j in pa:
                raise GraphInvariantError(f"self-loop at node {j}")
            if len(set(pa)) != len(pa):
                raise GraphInvariantError(f"duplicate parents at node {j}")
            if any(s < 0 or s >= self.p for s in pa):
                raise GraphInvariantError(f"parent id out of range at node {j}")
            total += len(pa)
        if total != self.edge_count:
            raise GraphInvariantError("edge_count out of sync with parent lists")
        topological_order(self)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, data: dict) -> Dag:
        return cls(int(data["p"]), [(int(s), int(t)) for s, t in data["edges"]])

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> Dag:
        return cls.from_dict(json.loads(text))

    def to_dot(self, labels: list[str] | None = None, name: str = "G") -> str:
        def lab(i: int) -> str:
            return f'"{labels[i]}"' if labels is not None else str(i)

        lines = [f"digraph {name} {{"]
        lines += [f"  {lab(i)};" for i in range(self.p)]
        lines += [f"  {lab(s)} -> {lab(t)};" for s, t in self.edges()]
        lines.append("}")
        return "\n".join(lines) + "\n"


class Skeleton:
    """Undirected edge set stored as normalized ``(i, j)`` pairs with ``i < j``."""

    def __init__(self, p: int, edges: Iterable[tuple[int, int]] = ()):
        self.p = int(p)
        normalized = set()
        for i, j in edges:
            i = _check_node(self.p, i)
            j = _check_node(self.p, j)
            if i == j:
                raise ValueError(f"self-pair {{{i},{i}}} not allowed")
            normalized.add((min(i, j), max(i, j)))
        self.edges: frozenset[tuple[int, int]] = frozenset(normalized)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        i, j = pair
        return (min(i, j), max(i, j)) in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.edges))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Skeleton):
            return NotImplemented
        return self.p == other.p and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Skeleton(p={self.p}, edges={sorted(self.edges)})"

    def issubset(self, other: Skeleton) -> bool:
        return self.edges <= other.edges

    def neighbors(self) -> list[list[int]]:
        nb: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in sorted(self.edges):
            nb[i].append(j)
            nb[j].append(i)
        return nb

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, data: dict) -> Skeleton:
        return cls(int(data["p"]), [(int(i), int(j)) for i, j in data["edges"]])

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> Skeleton:
        return cls.from_dict(json.loads(text))


def would_create_cycle(dag: Dag, source: int, target: int) -> bool:
    """True iff adding ``source -> target`` closes a directed cycle.

    Walks ancestors of ``source`` through the parent lists looking for ``target``.
    """
    source = _check_node(dag.p, source)
    target = _check_node(dag.p, target)
    if source == target:
        raise ValueError("source and target must differ")
    seen = {source}
    stack = [source]
    while stack:
        node = stack.pop()
        for parent in dag.parents[node]:
            if parent == target:
                return True
            if parent not in seen:
                seen.add(parent)
                stack.append(parent)
    return False


def topological_order(dag: Dag) -> list[int]:
    """Kahn's algorithm; ties resolved by smallest node id first."""
    indeg = [len(pa) for pa in dag.parents]
    children = dag.children()
    ready = deque(sorted(j for j in range(dag.p) if indeg[j] == 0))
    order: list[int] = []
    while ready:
        node = ready.popleft()
        order.append(node)
        for child in sorted(children[node]):
            indeg[child] -= 1
            if indeg[child] == 0:
                ready.append(child)
    if len(order) != dag.p:
        raise GraphInvariantError("directed cycle detected")
    return order


def skeleton_of(dag: Dag) -> Skeleton:
    return Skeleton(dag.p, dag.edges())


def descendant_masks(dag: Dag) -> list[int]:
    """Per-node bitmask of strict descendants (bit ``i`` set when ``i`` is reachable)."""
    children = dag.children()
    masks = [0] * dag.p
    for node in reversed(topological_order(dag)):
        mask = 0
        for child in children[node]:
            mask |= (1 << child) | masks[child]
        masks[node] = mask
    return masks
