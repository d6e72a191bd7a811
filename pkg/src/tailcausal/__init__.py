"""Causal discovery for heavy-tailed data from tail prediction asymmetry.

Stage one screens a skeleton with proxy-adjusted nodewise Lasso on log-tail
coordinates; stage two orients it by greedy minimisation of an EBIC-penalised
max-linear envelope score.
"""

from .asymmetry import RiskEstimate, empirical_tail_risk, theorem1_experiment
from .envelope import EnvelopeScorer, NodeScore, OffsetTable, compute_offsets, node_score
from .estimator import TailCausalDiscovery, discover
from .exceptions import ConfigError, EmptyTailError, GraphInvariantError, SearchSizeError
from .experiment import ExperimentConfig, load_experiment, preset, run_experiment
from .graph import Dag, Skeleton, skeleton_of, topological_order
from .lasso import LassoProblem, MaskedLasso
from .metrics import StructureReport, conf_fp, dag_metrics, skeleton_metrics
from .search import SearchConfig, exhaustive_orient, greedy_orient
from .simulate import SimConfig, SimTruth, simulate
from .skeleton import ScreenConfig, SkeletonScreen, screen
from .tail import RawPanel, TailSample, TailTransformer, build_tail_sample, read_panel_csv

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Dag", "EmptyTailError", "EnvelopeScorer", "ExperimentConfig",
    "GraphInvariantError", "LassoProblem", "MaskedLasso", "NodeScore", "OffsetTable",
    "RawPanel", "RiskEstimate", "ScreenConfig", "SearchConfig", "SearchSizeError", "SimConfig",
    "SimTruth", "Skeleton", "SkeletonScreen", "StructureReport", "TailCausalDiscovery",
    "TailSample", "TailTransformer", "build_tail_sample", "compute_offsets", "conf_fp",
    "dag_metrics", "discover", "empirical_tail_risk", "exhaustive_orient", "greedy_orient",
    "load_experiment", "node_score", "preset", "read_panel_csv", "run_experiment", "screen",
    "simulate", "skeleton_metrics", "skeleton_of", "theorem1_experiment", "topological_order",
]
