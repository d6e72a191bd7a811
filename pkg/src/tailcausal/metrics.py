"""Structure-recovery metrics: precision/recall/F1, SHD and confounding false positives."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .graph import Dag, Skeleton, skeleton_of
from .simulate import SimTruth


@dataclass
class StructureReport:
    precision: float
    recall: float
    f1: float
    shd: int
    tp: int
    fp: int
    fn: int
    conf_fp: int | None = None
    conf_fp_frac: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.conf_fp is None:
            out.pop("conf_fp")
            out.pop("conf_fp_frac")
        return out


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def skeleton_metrics(estimate: Skeleton, truth: Skeleton) -> StructureReport:
    if estimate.p != truth.p:
        raise ValueError(f"dimension mismatch: {estimate.p} vs {truth.p}")
    tp = len(estimate.edges & truth.edges)
    fp = len(estimate.edges - truth.edges)
    fn = len(truth.edges - estimate.edges)
    return StructureReport(*_prf(tp, fp, fn), shd=fp + fn, tp=tp, fp=fp, fn=fn)


def dag_metrics(estimate: Dag, truth: Dag) -> StructureReport:
    """Directed P/R/F1; SHD counts one per missing, extra or reversed adjacency."""
    if estimate.p != truth.p:
        raise ValueError(f"dimension mismatch: {estimate.p} vs {truth.p}")
    est = set(estimate.edges())
    tru = set(truth.edges())
    tp = len(est & tru)
    fp = len(est - tru)
    fn = len(tru - est)
    est_adj = skeleton_of(estimate).edges
    tru_adj = skeleton_of(truth).edges
    reversed_count = sum(1 for s, t in est if (t, s) in tru)
    shd = len(est_adj ^ tru_adj) + reversed_count
    return StructureReport(*_prf(tp, fp, fn), shd=shd, tp=tp, fp=fp, fn=fn)


def conf_fp(estimate: Dag | Skeleton, truth: SimTruth) -> tuple[int, float | None]:
    """Spurious adjacencies between non-adjacent nodes that share a latent confounder.

    Returns ``(count, count / all false-positive adjacencies)``; the fraction is
    ``None`` when there are no false positives at all.
    """
    est = estimate.edges if isinstance(estimate, Skeleton) else skeleton_of(estimate).edges
    if (estimate.p if isinstance(estimate, Skeleton) else estimate.p) != truth.dag.p:
        raise ValueError("dimension mismatch between estimate and truth")
    false_pos = est - skeleton_of(truth.dag).edges
    confounded = truth.confounded_pairs()
    count = len(false_pos & confounded)
    frac = count / len(false_pos) if false_pos else None
    return count, frac


def with_conf(report: StructureReport, estimate: Dag | Skeleton, truth: SimTruth) -> StructureReport:
    report.conf_fp, report.conf_fp_frac = conf_fp(estimate, truth)
    return report
