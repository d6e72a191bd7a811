"""Stage 2: greedy add/delete/reverse search over skeleton-compatible DAGs, plus an exhaustive oracle."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ._validation import check_int, check_open_unit, check_positive
from .envelope import EnvelopeScorer
from .exceptions import GraphInvariantError, SearchSizeError
from .graph import Dag, Skeleton, descendant_masks, topological_order
from .tail import TailSample

logger = logging.getLogger(__name__)

KIND_RANK = {"add": 0, "delete": 1, "reverse": 2}

EXHAUSTIVE_MAX_P = 6
EXHAUSTIVE_MAX_EDGES = 8


@dataclass
class SearchConfig:
    gamma_ebic: float = 10.0
    d_max: int = 10
    q: float = 0.05
    init_mode: str = "empty"
    max_iterations: int = 100000

    def __post_init__(self):
        check_positive(self.gamma_ebic, "gamma_ebic", allow_zero=True)
        check_int(self.d_max, "d_max", minimum=1)
        check_open_unit(self.q, "q")
        check_int(self.max_iterations, "max_iterations", minimum=1)
        if self.init_mode not in ("empty", "ordered"):
            raise ValueError(f"init_mode must be 'empty' or 'ordered', got {self.init_mode!r}")


@dataclass(frozen=True)
class Move:
    kind: str
    source: int
    target: int
    score_delta: float = float("nan")

    def sort_key(self) -> tuple:
        return (self.score_delta, KIND_RANK[self.kind], self.source, self.target)

    def apply(self, dag: Dag) -> None:
        if self.kind == "add":
            dag.add_edge(self.source, self.target)
        elif self.kind == "delete":
            dag.remove_edge(self.source, self.target)
        else:
            dag.reverse_edge(self.source, self.target)

    def parent_changes(self, dag: Dag) -> dict[int, frozenset]:
        """New parent sets of the nodes this move touches."""
        s, t = self.source, self.target
        if self.kind == "add":
            return {t: frozenset(dag.parents[t]) | {s}}
        if self.kind == "delete":
            return {t: frozenset(dag.parents[t]) - {s}}
        return {t: frozenset(dag.parents[t]) - {s}, s: frozenset(dag.parents[s]) | {t}}


@dataclass
class SearchResult:
    dag: Dag
    score: float
    initial_score: float
    moves: list[dict] = field(default_factory=list)
    truncated: bool = False
    candidates: int = 0

    def move_log_json(self, **kwargs) -> str:
        return json.dumps({"initial_score": self.initial_score, "final_score": self.score,
                           "truncated": self.truncated, "moves": self.moves}, **kwargs)

    def write_move_log(self, path: str | Path) -> None:
        Path(path).write_text(self.move_log_json(indent=1))


def enumerate_moves(dag: Dag, skeleton: Skeleton, config: SearchConfig) -> list[Move]:
    """All admissible moves, unscored, in (kind, source, target) order.

    Additions are limited to skeleton pairs with no current edge; every move
    keeps the graph acyclic with in-degree at most ``d_max``.
    """
    desc = descendant_masks(dag)
    children = dag.children()
    moves: list[Move] = []
    d_max = config.d_max
    for i, j in sorted(skeleton.edges):
        if dag.has_edge(i, j):
            forward = (i, j)
        elif dag.has_edge(j, i):
            forward = (j, i)
        else:
            forward = None
        if forward is None:
            # s -> t closes a cycle iff s is already a descendant of t
            if len(dag.parents[j]) < d_max and not (desc[j] >> i) & 1:
                moves.append(Move("add", i, j))
            if len(dag.parents[i]) < d_max and not (desc[i] >> j) & 1:
                moves.append(Move("add", j, i))
            continue
        s, t = forward
        moves.append(Move("delete", s, t))
        if len(dag.parents[s]) < d_max:
            # reversal is cyclic iff another directed path s ~> t survives
            other_path = any(c == t or (desc[c] >> t) & 1 for c in children[s] if c != t)
            if not other_path:
                moves.append(Move("reverse", s, t))
    moves.sort(key=lambda m: (KIND_RANK[m.kind], m.source, m.target))
    return moves


def score_delta(move: Move, dag: Dag, scorer: EnvelopeScorer) -> float:
    """Score change from applying ``move``; only touched nodes are rescored."""
    delta = 0.0
    for node, new_pa in move.parent_changes(dag).items():
        delta += scorer.local_score(node, new_pa).total - scorer.local_score(node, dag.parents[node]).total
    return delta


def initial_dag(skeleton: Skeleton, mode: str, d_max: int | None = None) -> Dag:
    """Empty graph, or every skeleton edge oriented low -> high index.

    In ordered mode an edge is skipped once its target already has ``d_max``
    parents, scanning pairs in sorted order.
    """
    dag = Dag(skeleton.p)
    if mode == "empty":
        return dag
    for s, t in sorted(skeleton.edges):
        if d_max is None or len(dag.parents[t]) < d_max:
            dag.add_edge(s, t)
    return dag


def _check_inputs(skeleton: Skeleton, sample: TailSample) -> None:
    if skeleton.p != sample.p:
        raise ValueError(f"skeleton has p={skeleton.p} but sample has p={sample.p}")


def greedy_orient(skeleton: Skeleton, sample: TailSample, config: SearchConfig | None = None,
                  scorer: EnvelopeScorer | None = None, init: Dag | None = None) -> SearchResult:
    """Best-improvement hill climbing; stops when no admissible move has a negative delta.

    Ties between equal deltas go to the lowest (kind, source, target) with
    add < delete < reverse.
    """
    config = config or SearchConfig()
    _check_inputs(skeleton, sample)
    scorer = scorer or EnvelopeScorer(sample, config.q, config.gamma_ebic)
    dag = init.copy() if init is not None else initial_dag(skeleton, config.init_mode, config.d_max)
    for s, t in dag.edges():
        if (s, t) not in skeleton:
            raise ValueError(f"initial edge {s}->{t} is not in the skeleton")
        if dag.in_degree(t) > config.d_max:
            raise ValueError("initial graph violates d_max")
    current = scorer.total_score(dag)
    result = SearchResult(dag, current, current)
    iteration = 0
    while True:
        if iteration >= config.max_iterations:
            result.truncated = True
            logger.warning("greedy search stopped after %d iterations", iteration)
            break
        best: Move | None = None
        for move in enumerate_moves(dag, skeleton, config):
            scored = Move(move.kind, move.source, move.target, score_delta(move, dag, scorer))
            if best is None or scored.sort_key() < best.sort_key():
                best = scored
        if best is None or not best.score_delta < 0:
            break
        best.apply(dag)
        iteration += 1
        current += best.score_delta
        result.moves.append({"iteration": iteration, "kind": best.kind, "source": best.source,
                             "target": best.target, "delta": best.score_delta, "score": current})
    result.score = scorer.total_score(dag)
    return result


def exhaustive_orient(skeleton: Skeleton, sample: TailSample, config: SearchConfig | None = None,
                      scorer: EnvelopeScorer | None = None) -> SearchResult:
    """Global score minimizer over every absent/forward/backward assignment of skeleton edges.

    Ties resolve to the lexicographically smallest sorted edge list.
    """
    config = config or SearchConfig()
    _check_inputs(skeleton, sample)
    if skeleton.p > EXHAUSTIVE_MAX_P or len(skeleton) > EXHAUSTIVE_MAX_EDGES:
        raise SearchSizeError(f"exhaustive search limited to p <= {EXHAUSTIVE_MAX_P} and "
                              f"<= {EXHAUSTIVE_MAX_EDGES} skeleton edges "
                              f"(got p={skeleton.p}, {len(skeleton)} edges)")
    scorer = scorer or EnvelopeScorer(sample, config.q, config.gamma_ebic)
    pairs = sorted(skeleton.edges)
    best_key = None
    best_dag = None
    candidates = 0
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        candidates += 1
        edges = []
        for (i, j), state in zip(pairs, states):
            if state == 1:
                edges.append((i, j))
            elif state == 2:
                edges.append((j, i))
        parents: list[list[int]] = [[] for _ in range(skeleton.p)]
        for s, t in edges:
            parents[t].append(s)
        if any(len(pa) > config.d_max for pa in parents):
            continue
        dag = Dag(skeleton.p)
        dag.parents = parents
        dag.edge_count = len(edges)
        try:
            topological_order(dag)
        except GraphInvariantError:
            continue
        score = sum(scorer.local_score(j, parents[j]).total for j in range(skeleton.p))
        key = (score, sorted(edges))
        if best_key is None or key < best_key:
            best_key, best_dag = key, dag
    empty = scorer.total_score(Dag(skeleton.p))
    return SearchResult(best_dag, float(best_key[0]), empty, candidates=candidates)
