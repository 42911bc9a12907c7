"""Transductive maximum-margin classification for few-shot episodes.

Typical use::

    from fstmmc import gen_synthetic, ProtocolConfig, TmmcConfig, evaluate

    data = gen_synthetic(n_classes=20, per_class=60, dim=64, separation=8.0, seed=1)
    report = evaluate(data, ProtocolConfig(n_way=5, k_shot=1, episodes=100), TmmcConfig())
    print(report.mean_accuracy, report.ci95)
"""

from .classifier import (
    DEFAULT_SCHEDULE,
    EpisodePrediction,
    TmmcConfig,
    build_binary_problem,
    class_weights,
    classify_episode,
    classify_episode_mmc,
    fit_binary,
)
from .episodes import ProtocolConfig, sample_batch, sample_episode
from .evaluation import EvalReport, confidence_interval, demo2d, evaluate, gradcheck
from .features import Episode, FeatureDataset, gen_synthetic, load_dataset, transform_episode, write_dataset
from .kernel import KernelSpec, eval_f, gram_matrix, kernel_eval
from .lbfgs import LbfgsConfig, OptimResult, minimize
from .objective import BinaryProblem, objective_gradient, objective_value
from .platt import PlattCalibrator, fit_platt, platt_predict

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SCHEDULE",
    "BinaryProblem",
    "Episode",
    "EpisodePrediction",
    "EvalReport",
    "FeatureDataset",
    "KernelSpec",
    "LbfgsConfig",
    "OptimResult",
    "PlattCalibrator",
    "ProtocolConfig",
    "TmmcConfig",
    "build_binary_problem",
    "class_weights",
    "classify_episode",
    "classify_episode_mmc",
    "confidence_interval",
    "demo2d",
    "eval_f",
    "evaluate",
    "fit_binary",
    "fit_platt",
    "gen_synthetic",
    "gradcheck",
    "gram_matrix",
    "kernel_eval",
    "load_dataset",
    "minimize",
    "objective_gradient",
    "objective_value",
    "platt_predict",
    "sample_batch",
    "sample_episode",
    "transform_episode",
    "write_dataset",
]
