import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailcausal.graph import Dag, Skeleton, skeleton_of
from tailcausal.metrics import conf_fp, dag_metrics, skeleton_metrics, with_conf
from tailcausal.simulate import SimTruth


def brute_shd(estimate, truth):
    """Minimum edit count with add, delete and reverse as unit operations, per node pair."""
    cost = 0
    for a, b in itertools.combinations(range(truth.p), 2):
        state = lambda g: (g.has_edge(a, b), g.has_edge(b, a))
        e, t = state(estimate), state(truth)
        if e == t:
            continue
        cost += 1  # a single add, delete or reverse always suffices for one pair
    return cost


def random_dag(rng, p, density=0.4):
    order = rng.permutation(p)
    return Dag(p, [(int(order[i]), int(order[j])) for i in range(p) for j in range(i + 1, p)
                   if rng.random() < density])


def truth_with(p, edges, exposure=()):
    dag = Dag(p, edges)
    return SimTruth(dag, {e: 0.7 for e in dag.edges()}, [list(x) for x in exposure])


class TestSkeletonMetrics:
    def test_identity(self):
        s = Skeleton(4, [(0, 1), (2, 3)])
        r = skeleton_metrics(s, s)
        assert (r.precision, r.recall, r.f1, r.shd) == (1, 1, 1, 0)

    def test_empty_estimate(self):
        r = skeleton_metrics(Skeleton(3), Skeleton(3, [(0, 1), (1, 2)]))
        assert (r.precision, r.recall, r.f1, r.shd) == (0, 0, 0, 2)

    def test_half_overlap(self):
        r = skeleton_metrics(Skeleton(3, [(0, 1), (0, 2)]), Skeleton(3, [(0, 1), (1, 2)]))
        assert (r.precision, r.recall, r.f1, r.shd) == (0.5, 0.5, 0.5, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            skeleton_metrics(Skeleton(3), Skeleton(4))

    def test_conf_fields_absent(self):
        assert "conf_fp" not in skeleton_metrics(Skeleton(2), Skeleton(2)).to_dict()


class TestDagMetrics:
    def test_one_reversal(self):
        r = dag_metrics(Dag(3, [(0, 1), (2, 1)]), Dag(3, [(0, 1), (1, 2)]))
        assert (r.tp, r.precision, r.recall, r.shd) == (1, 0.5, 0.5, 1)

    def test_identity(self):
        d = Dag(4, [(0, 1), (1, 2), (0, 3)])
        r = dag_metrics(d, d)
        assert (r.precision, r.recall, r.f1, r.shd) == (1, 1, 1, 0)

    def test_fully_reversed(self):
        truth = Dag(4, [(0, 1), (1, 2), (0, 3)])
        est = Dag(4, [(t, s) for s, t in truth.edges()])
        r = dag_metrics(est, truth)
        assert (r.precision, r.recall, r.shd) == (0, 0, 3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dag_metrics(Dag(2), Dag(3))

    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_shd_matches_brute_force(self, seed, p):
        rng = np.random.default_rng(seed)
        est, truth = random_dag(rng, p), random_dag(rng, p)
        assert dag_metrics(est, truth).shd == brute_shd(est, truth)

    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_relabeling_invariance(self, seed, p):
        rng = np.random.default_rng(seed)
        est, truth = random_dag(rng, p), random_dag(rng, p)
        perm = rng.permutation(p)
        relabel = lambda g: Dag(p, [(int(perm[s]), int(perm[t])) for s, t in g.edges()])
        assert dag_metrics(est, truth) == dag_metrics(relabel(est), relabel(truth))
        assert skeleton_metrics(skeleton_of(est), skeleton_of(truth)) == \
            skeleton_metrics(skeleton_of(relabel(est)), skeleton_of(relabel(truth)))

    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_projection_consistency(self, seed, p):
        """Orienting both skeletons low -> high makes DAG metrics equal skeleton metrics."""
        rng = np.random.default_rng(seed)
        a, b = skeleton_of(random_dag(rng, p)), skeleton_of(random_dag(rng, p))
        as_dag = lambda s: Dag(p, sorted(s.edges))
        assert dag_metrics(as_dag(a), as_dag(b)) == skeleton_metrics(a, b)

    @given(st.integers(0, 10_000), st.integers(3, 8))
    def test_adding_true_edge_keeps_recall(self, seed, p):
        rng = np.random.default_rng(seed)
        truth = random_dag(rng, p, 0.5)
        missing = [e for e in truth.edges()]
        est = Dag(p)
        before = dag_metrics(est, truth).recall
        for s, t in missing:
            est.add_edge(s, t)
            after = dag_metrics(est, truth).recall
            assert after >= before
            before = after

    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_f1_formula(self, seed, p):
        rng = np.random.default_rng(seed)
        r = dag_metrics(random_dag(rng, p), random_dag(rng, p))
        expected = 2 * r.precision * r.recall / (r.precision + r.recall) if r.precision + r.recall else 0
        assert r.f1 == pytest.approx(expected)


class TestConfFp:
    def test_no_confounders(self):
        truth = truth_with(4, [(0, 1)])
        assert conf_fp(Skeleton(4, [(0, 2), (1, 3)]), truth) == (0, 0.0)

    def test_single_confounded_fp(self):
        truth = truth_with(4, [(0, 1)], [[2, 3]])
        assert conf_fp(Dag(4, [(0, 1), (3, 2)]), truth) == (1, 1.0)

    def test_mixed(self):
        truth = truth_with(6, [(0, 1)], [[2, 3, 4]])
        est = Skeleton(6, [(0, 1), (2, 3), (3, 4), (0, 5), (1, 5), (1, 2)])
        assert conf_fp(est, truth) == (2, 0.4)

    def test_adjacent_confounded_pair_not_counted(self):
        truth = truth_with(3, [(0, 1)], [[0, 1]])
        assert conf_fp(Skeleton(3, [(0, 1)]), truth) == (0, None)

    def test_with_conf_and_bound(self):
        truth = truth_with(6, [(0, 1)], [[2, 3, 4]])
        est = Dag(6, [(2, 3), (0, 5)])
        r = with_conf(dag_metrics(est, truth.dag), est, truth)
        assert r.conf_fp == 1 and r.conf_fp_frac == 0.5
        assert r.conf_fp <= r.fp
        assert "conf_fp" in r.to_dict()
