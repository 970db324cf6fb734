"""Clustering of curves by an ensemble of random projections of their spline coefficients."""
from .consensus import ConsensusConfig, ConsensusResult, CrispPartition, crispify, ensemble_entropy, se_consensus
from .errors import RPFClustError
from .evaluation import adjusted_rand_index, cluster_count_table, confusion_matrix, evaluate
from .gmm import ALL_MODELS, CovarianceModel, MixtureFit, em_fit, fit_best
from .pipeline import PipelineConfig, PipelineResult, run_pipeline, select_d
from .projection import ProjectionKind, gaussian_matrix, haar_matrix, heuristic_dim, project
from .ranking import RankCriterion, kl_gaussian, rank_and_select, wasserstein_gaussian
from .simulate import ScenarioSpec, gen_scenario
from .smoothing import BasisSpec, CoefficientMatrix, CurveSet, TimeGrid, select_smoothing, smooth_dataset

__version__ = "0.1.0"

__all__ = [
    "ALL_MODELS",
    "BasisSpec",
    "CoefficientMatrix",
    "ConsensusConfig",
    "ConsensusResult",
    "CovarianceModel",
    "CrispPartition",
    "CurveSet",
    "MixtureFit",
    "PipelineConfig",
    "PipelineResult",
    "ProjectionKind",
    "RPFClustError",
    "RankCriterion",
    "ScenarioSpec",
    "TimeGrid",
    "adjusted_rand_index",
    "cluster_count_table",
    "confusion_matrix",
    "crispify",
    "em_fit",
    "ensemble_entropy",
    "evaluate",
    "fit_best",
    "gaussian_matrix",
    "gen_scenario",
    "haar_matrix",
    "heuristic_dim",
    "kl_gaussian",
    "project",
    "rank_and_select",
    "run_pipeline",
    "se_consensus",
    "select_d",
    "select_smoothing",
    "smooth_dataset",
    "wasserstein_gaussian",
]
