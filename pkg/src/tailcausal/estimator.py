"""End-to-end two-stage estimator with a scikit-learn style interface."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .envelope import EnvelopeScorer
from .graph import Dag, Skeleton
from .search import SearchConfig, SearchResult, greedy_orient
from .skeleton import NodewiseResult, ScreenConfig, screen
from .tail import RawPanel, TailSample, build_tail_sample


def discover(panel: RawPanel, beta: float = 0.7, screen_config: ScreenConfig | None = None,
             search_config: SearchConfig | None = None, transform_proxy: bool = True,
             q_conf: float | None = None):
    """Tail selection, nodewise screening and greedy orientation.

    Returns ``(sample, nodewise, skeleton, search_result)``.
    """
    sample = build_tail_sample(panel, beta, transform_proxy=transform_proxy, q_conf=q_conf)
    skeleton, nodewise = screen(sample, screen_config or ScreenConfig())
    result = greedy_orient(skeleton, sample, search_config or SearchConfig())
    return sample, nodewise, skeleton, result


class TailCausalDiscovery(BaseEstimator):
    """Causal DAG discovery for heavy-tailed data driven by tail prediction asymmetry.

    Stage one screens a candidate skeleton with nodewise Lasso regressions on
    log-tail coordinates, controlling for optional proxy variables without
    penalty. Stage two orients and prunes the skeleton by greedy minimisation
    of an EBIC-penalised max-linear envelope score.

    Parameters
    ----------
    beta : float, default=0.7
        Exceedance exponent; the Pareto threshold is ``n ** (1 - beta)``.
    q_conf : float, optional
        Fixed marginal quantile level for the threshold; overrides ``beta``.
    lambda_multiplier : float, default=1.0
        ``C`` in ``lambda = C * sqrt(log p / k)``.
    tau_ratio : float, default=0.5
        Coefficient threshold as a fraction of ``lambda``.
    offset_quantile : float, default=0.05
        Quantile level used for envelope offsets.
    gamma_ebic : float, default=10.0
    d_max : int, default=10
        Maximum in-degree of the returned DAG.
    init_mode : {"empty", "ordered"}, default="empty"
    transform_proxy : bool, default=True
        Put proxies on the same rank-Pareto log-tail scale as the data.

    Attributes
    ----------
    dag_ : Dag
    skeleton_ : Skeleton
    tail_sample_ : TailSample
    nodewise_ : NodewiseResult
    search_ : SearchResult
    score_ : float
        Final total score (lower is better).
    n_exceedances_ : int
    """

    def __init__(self, beta: float = 0.7, q_conf: float | None = None,
                 lambda_multiplier: float = 1.0, tau_ratio: float = 0.5,
                 offset_quantile: float = 0.05, gamma_ebic: float = 10.0, d_max: int = 10,
                 init_mode: str = "empty", transform_proxy: bool = True,
                 max_iterations: int = 100000, tol: float = 1e-7, max_sweeps: int = 10000):
        self.beta = beta
        self.q_conf = q_conf
        self.lambda_multiplier = lambda_multiplier
        self.tau_ratio = tau_ratio
        self.offset_quantile = offset_quantile
        self.gamma_ebic = gamma_ebic
        self.d_max = d_max
        self.init_mode = init_mode
        self.transform_proxy = transform_proxy
        self.max_iterations = max_iterations
        self.tol = tol
        self.max_sweeps = max_sweeps

    def _configs(self) -> tuple[ScreenConfig, SearchConfig]:
        screen_config = ScreenConfig(self.lambda_multiplier, self.tau_ratio, None,
                                     self.tol, self.max_sweeps)
        search_config = SearchConfig(self.gamma_ebic, self.d_max, self.offset_quantile,
                                     self.init_mode, self.max_iterations)
        return screen_config, search_config

    def fit(self, X, y=None, proxy=None):
        """Fit on an ``n x p`` panel; ``proxy`` is an optional ``n x d`` matrix."""
        X = check_matrix(X, "X", min_rows=2, min_cols=2)
        if proxy is not None:
            proxy = check_matrix(proxy, "proxy", min_rows=2)
        panel = RawPanel(X, proxy)
        return self.fit_panel(panel)

    def fit_panel(self, panel: RawPanel):
        screen_config, search_config = self._configs()
        sample, nodewise, skeleton, result = discover(
            panel, self.beta, screen_config, search_config, self.transform_proxy, self.q_conf)
        self.tail_sample_: TailSample = sample
        self.nodewise_: NodewiseResult = nodewise
        self.skeleton_: Skeleton = skeleton
        self.search_: SearchResult = result
        self.dag_: Dag = result.dag
        self.score_ = result.score
        self.n_exceedances_ = sample.k
        self.threshold_ = sample.u
        self.n_features_in_ = panel.p
        self.feature_names_ = list(panel.columns)
        return self

    @property
    def adjacency_matrix_(self) -> np.ndarray:
        """Boolean ``p x p`` matrix with ``[i, j]`` true for an edge ``i -> j``."""
        check_is_fitted(self, "dag_")
        adj = np.zeros((self.n_features_in_,) * 2, dtype=bool)
        for s, t in self.dag_.edges():
            adj[s, t] = True
        return adj

    def score_dag(self, dag: Dag) -> float:
        """Total envelope score of any DAG on the fitted tail sample."""
        check_is_fitted(self, "dag_")
        scorer = EnvelopeScorer(self.tail_sample_, self.offset_quantile, self.gamma_ebic)
        return scorer.total_score(dag)
