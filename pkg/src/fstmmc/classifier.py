"""Transductive max-margin few-shot classifier (one-vs-rest, lambda2 annealing, Platt scaling)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .features import Episode
from .kernel import LINEAR, KernelSpec, gram_matrix
from .lbfgs import LbfgsConfig, OptimizationError, OptimResult, minimize
from .objective import BinaryProblem, value_and_gradient
from .platt import PlattCalibrator, fit_platt, platt_predict

TRANSDUCTIVE = "transductive"
INDUCTIVE = "inductive"
DEFAULT_SCHEDULE = (0.0, 1e-5, 1e-3, 0.1, 1.0)


class DegenerateProblemError(ValueError):
    pass


class FitError(RuntimeError):
    """Optimizer failure inside one class / annealing stage."""

    def __init__(self, message: str, class_index: int | None = None, stage: int | None = None):
        super().__init__(message)
        self.class_index = class_index
        self.stage = stage


@dataclass(frozen=True)
class TmmcConfig:
    lambda1: float = 0.04
    gamma1: float = 20.0
    gamma2: float = 2.0
    lambda2_schedule: tuple[float, ...] = DEFAULT_SCHEDULE
    kernel: KernelSpec = LINEAR
    optimizer: LbfgsConfig = field(default_factory=LbfgsConfig)
    mode: str = TRANSDUCTIVE

    def __post_init__(self):
        if self.mode not in (TRANSDUCTIVE, INDUCTIVE):
            raise ValueError(f"mode must be {TRANSDUCTIVE!r} or {INDUCTIVE!r}")
        schedule = tuple(float(v) for v in self.lambda2_schedule)
        if self.mode == INDUCTIVE:
            schedule = (0.0,)
        if not schedule or schedule[0] != 0.0:
            raise ValueError("lambda2 schedule must start at 0")
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError("lambda2 schedule must be strictly increasing")
        object.__setattr__(self, "lambda2_schedule", schedule)
        if not (self.lambda1 > 0 and self.gamma1 > 0 and self.gamma2 > 0):
            raise ValueError("lambda1, gamma1 and gamma2 must be positive")

    def inductive(self) -> "TmmcConfig":
        return replace(self, mode=INDUCTIVE)


@dataclass(frozen=True)
class OneVsRestLabels:
    class_index: int
    y: np.ndarray
    w: np.ndarray


@dataclass
class EpisodePrediction:
    probabilities: np.ndarray
    labels: np.ndarray
    log_odds: np.ndarray
    scores: np.ndarray
    per_class_alpha: list[np.ndarray]
    per_class_optim: list[list[OptimResult]]
    calibrators: list[PlattCalibrator]


def class_weights(y) -> np.ndarray:
    """Balanced weights: each sign's total weight is NK/2, so the weights sum to NK."""
    y = np.asarray(y, dtype=np.float64)
    n_pos = int(np.sum(y > 0))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateProblemError("one-vs-rest labels need both signs")
    return np.where(y > 0, y.size / (2.0 * n_pos), y.size / (2.0 * n_neg))


def one_vs_rest(support_y, class_index: int) -> OneVsRestLabels:
    y = np.where(np.asarray(support_y) == class_index, 1.0, -1.0)
    return OneVsRestLabels(class_index, y, class_weights(y))


def build_binary_problem(
    episode: Episode, class_index: int, cfg: TmmcConfig, K: np.ndarray
) -> tuple[BinaryProblem, OneVsRestLabels]:
    if not 0 <= class_index < episode.n_way:
        raise ValueError(f"class index {class_index} outside 0..{episode.n_way - 1}")
    labels = one_vs_rest(episode.support_y, class_index)
    problem = BinaryProblem(
        K=K,
        nk=episode.nk,
        nq=episode.nq,
        y=labels.y,
        w=labels.w,
        lambda1=cfg.lambda1,
        lambda2=cfg.lambda2_schedule[0],
        gamma1=cfg.gamma1,
        gamma2=cfg.gamma2,
    )
    return problem, labels


def fit_binary(problem: BinaryProblem, cfg: TmmcConfig, callback=None) -> tuple[np.ndarray, list[OptimResult]]:
    """Anneal lambda2 through the schedule, warm-starting each stage from the last."""
    alpha = np.zeros(problem.m)
    results = []
    for stage, lambda2 in enumerate(cfg.lambda2_schedule):
        staged = problem.with_lambda2(lambda2)
        try:
            res = minimize(lambda a: value_and_gradient(a, staged), alpha, cfg.optimizer, callback)
        except OptimizationError as exc:
            raise FitError(f"stage {stage} (lambda2={lambda2:g}): {exc}", stage=stage) from exc
        alpha = res.x_final
        results.append(res)
    return alpha, results


def argmax_labels(log_odds) -> np.ndarray:
    """Row-wise argmax with exact ties going to the lowest class index.

    Taken on log-odds rather than probabilities: the order is the same, but
    saturated probabilities (both clipped to 1) cannot tie.
    """
    return np.argmax(np.asarray(log_odds), axis=1)


def classify_episode(episode: Episode, cfg: TmmcConfig = TmmcConfig()) -> EpisodePrediction:
    """Label the query set of an already-transformed episode."""
    K = gram_matrix(cfg.kernel, episode.points())
    nk, n = episode.nk, episode.n_way
    probs = np.empty((episode.nq, n))
    log_odds = np.empty((episode.nq, n))
    scores = np.empty((episode.nk + episode.nq, n))
    alphas, optims, calibrators = [], [], []
    for c in range(n):
        problem, labels = build_binary_problem(episode, c, cfg, K)
        try:
            alpha, results = fit_binary(problem, cfg)
        except FitError as exc:
            raise FitError(f"class {c}: {exc}", class_index=c, stage=exc.stage) from exc
        e = K @ alpha
        cal = fit_platt(e[:nk], (labels.y > 0).astype(np.float64))
        scores[:, c] = e
        probs[:, c] = platt_predict(cal, e[nk:])
        log_odds[:, c] = cal.log_odds(e[nk:])
        alphas.append(alpha)
        optims.append(results)
        calibrators.append(cal)
    labels = argmax_labels(log_odds)
    return EpisodePrediction(probs, labels, log_odds, scores, alphas, optims, calibrators)


def classify_episode_mmc(episode: Episode, cfg: TmmcConfig = TmmcConfig()) -> EpisodePrediction:
    """Inductive ablation: only the lambda2 = 0 stage, so query points never enter the loss."""
    return classify_episode(episode, cfg.inductive())

