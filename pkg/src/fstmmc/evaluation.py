"""Episodic evaluation, confidence intervals, the 2-D boundary demo and gradient checks."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifier import (
    INDUCTIVE,
    DegenerateProblemError,
    FitError,
    TmmcConfig,
    class_weights,
    classify_episode,
    fit_binary,
)
from .episodes import ProtocolConfig, check_protocol, sample_episode
from .features import DegenerateFeatureError, FeatureDataset, transform_episode
from .kernel import gram_matrix
from .objective import BinaryProblem, finite_diff_gradient, objective_gradient, relative_gradient_error
from .platt import CalibrationError

MAX_FAILURE_FRACTION = 0.01
GRADCHECK_TOL = 1e-5


class EvaluationError(RuntimeError):
    pass


def mode_name(cfg: TmmcConfig) -> str:
    return "mmc" if cfg.mode == INDUCTIVE else "tmmc"


@dataclass
class EvalReport:
    protocol: ProtocolConfig
    config: TmmcConfig
    per_episode_accuracy: np.ndarray
    mean_accuracy: float
    ci95: float
    wall_time_seconds: float
    per_episode_seconds: float
    failed_episodes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "mean_accuracy": self.mean_accuracy,
            "ci95": self.ci95,
            "episodes": self.protocol.episodes,
            "mode": mode_name(cfg),
            "seed": self.protocol.seed,
            "wall_time_seconds": self.wall_time_seconds,
            "per_episode_seconds": self.per_episode_seconds,
            "failed_episodes": list(self.failed_episodes),
            "protocol": {
                "n_way": self.protocol.n_way,
                "k_shot": self.protocol.k_shot,
                "q_query": self.protocol.q_query,
            },
            "config": {
                "lambda1": cfg.lambda1,
                "gamma1": cfg.gamma1,
                "gamma2": cfg.gamma2,
                "lambda2_schedule": list(cfg.lambda2_schedule),
                "kernel": cfg.kernel.kind,
                "optimizer": asdict(cfg.optimizer),
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def write_per_episode(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "accuracy"])
            for i, acc in enumerate(self.per_episode_accuracy):
                writer.writerow([i, repr(float(acc))])


def confidence_interval(acc) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width 1.96 * sd / sqrt(T) (unbiased sd)."""
    acc = np.asarray(acc, dtype=np.float64)
    if acc.ndim != 1 or acc.size < 2:
        raise ValueError("need at least two accuracies")
    if acc.min() == acc.max():
        return float(acc[0]), 0.0
    # sqrt(var / T) rather than sd / sqrt(T): same value, one rounding fewer
    return float(acc.mean()), float(1.96 * math.sqrt(acc.var(ddof=1) / acc.size))


def episode_accuracy(dataset: FeatureDataset, proto: ProtocolConfig, cfg: TmmcConfig, index: int) -> float:
    episode = transform_episode(sample_episode(dataset, proto, index))
    prediction = classify_episode(episode, cfg)
    return float(np.mean(prediction.labels == episode.query_y))


def evaluate(dataset: FeatureDataset, proto: ProtocolConfig, cfg: TmmcConfig = TmmcConfig(), workers: int = 1) -> EvalReport:
    """Run ``proto.episodes`` episodes; each depends only on ``(seed, index)``."""
    check_protocol(dataset, proto)
    budget = MAX_FAILURE_FRACTION * proto.episodes

    def run(index):
        try:
            return episode_accuracy(dataset, proto, cfg, index)
        except (FitError, DegenerateFeatureError, DegenerateProblemError, CalibrationError):
            return math.nan

    start = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accuracies = list(pool.map(run, range(proto.episodes)))
    else:
        accuracies = [run(i) for i in range(proto.episodes)]
    wall = time.perf_counter() - start

    acc = np.array(accuracies)
    failures = np.flatnonzero(np.isnan(acc)).tolist()
    if len(failures) > budget:
        raise EvaluationError(f"{len(failures)} of {proto.episodes} episodes failed")
    ok = acc[~np.isnan(acc)]
    if ok.size >= 2:
        mean, ci = confidence_interval(ok)
    else:
        mean, ci = float(ok.mean()), math.nan
    return EvalReport(
        protocol=proto,
        config=cfg,
        per_episode_accuracy=acc,
        mean_accuracy=mean,
        ci95=ci,
        wall_time_seconds=wall,
        per_episode_seconds=wall / proto.episodes,
        failed_episodes=failures,
    )


# -- 2-D demo -----------------------------------------------------------------


@dataclass
class Demo2dScenario:
    """2-way 1-shot layout: support at (0, +/-1), queries spread along a tilted line through each."""

    tilt_degrees: float = 25.0
    per_class: int = 40
    half_length: float = 3.0
    noise: float = 0.2
    seed: int = 0

    def points(self):
        rng = np.random.default_rng(self.seed)
        theta = math.radians(self.tilt_degrees)
        along = np.array([math.cos(theta), -math.sin(theta)])
        t = np.linspace(-self.half_length, self.half_length, self.per_class)[:, None]
        pos, neg = np.array([0.0, 1.0]), np.array([0.0, -1.0])
        query_pos = pos + t * along + self.noise * rng.standard_normal((self.per_class, 2))
        query_neg = neg + t * along + self.noise * rng.standard_normal((self.per_class, 2))
        support = np.vstack([pos, neg])
        query = np.vstack([query_pos, query_neg])
        query_y = np.r_[np.ones(self.per_class), -np.ones(self.per_class)]
        return support, np.array([1.0, -1.0]), query, query_y


SCENARIOS = {
    "figure1": Demo2dScenario(),
    "control": Demo2dScenario(tilt_degrees=0.0),
}


@dataclass
class Demo2dResult:
    inductive_normal: np.ndarray
    transductive_normal: np.ndarray
    rotation_degrees: float
    inductive_errors: int
    transductive_errors: int
    files: list[Path]


def boundary_normal_from_grid(xs, ys, values) -> np.ndarray:
    """Unit normal of the zero level set, from sign changes along grid rows and columns.

    ``values[i, j]`` is the decision value at ``(xs[j], ys[i])``.  The
    crossing points are fitted with a line; the normal is oriented towards
    positive values.
    """
    pts = []
    for i, y in enumerate(ys):
        row = values[i]
        for j in np.flatnonzero(np.sign(row[:-1]) != np.sign(row[1:])):
            frac = row[j] / (row[j] - row[j + 1])
            pts.append((xs[j] + frac * (xs[j + 1] - xs[j]), y))
    for j, x in enumerate(xs):
        col = values[:, j]
        for i in np.flatnonzero(np.sign(col[:-1]) != np.sign(col[1:])):
            frac = col[i] / (col[i] - col[i + 1])
            pts.append((x, ys[i] + frac * (ys[i + 1] - ys[i])))
    pts = np.array(pts)
    if len(pts) < 2:
        raise ValueError("decision function has no zero crossing on the grid")
    _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
    normal = vt[-1]
    # orient along increasing values
    gy, gx = np.gradient(values, ys, xs)
    if normal @ np.array([gx.mean(), gy.mean()]) < 0:
        normal = -normal
    return normal


def angle_between(u, v) -> float:
    cos = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def demo2d(scenario="figure1", out_path=None, cfg: TmmcConfig = TmmcConfig(), grid_size: int = 81, extent: float = 4.0) -> Demo2dResult:
    """Fit the positive-class boundary with and without query points; dump plot-ready CSVs.

    Writes ``<out_path>_points.csv`` (role, label, x, y) and
    ``<out_path>_grid.csv`` (x, y, f_inductive, f_transductive); nothing is
    written when ``out_path`` is None.  Raw 2-D
    coordinates are used: unit-normalizing 2-D points would collapse them
    onto a circle.
    """
    if isinstance(scenario, str):
        if scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
        scenario = SCENARIOS[scenario]
    support, support_y, query, query_y = scenario.points()
    X = np.vstack([support, query])
    K = gram_matrix(cfg.kernel, X)
    problem = BinaryProblem(
        K=K, nk=len(support), nq=len(query), y=support_y, w=class_weights(support_y),
        lambda1=cfg.lambda1, gamma1=cfg.gamma1, gamma2=cfg.gamma2,
    )
    alpha_ind, _ = fit_binary(problem, cfg.inductive())
    alpha_trans, _ = fit_binary(problem, cfg)

    xs = np.linspace(-extent, extent, grid_size)
    ys = np.linspace(-extent, extent, grid_size)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    # linear kernel: f(x) = sum_i alpha_i <x_i, x>
    f_ind = grid @ (X.T @ alpha_ind)
    f_trans = grid @ (X.T @ alpha_trans)

    files = []
    if out_path is not None:
        prefix = Path(out_path)
        points_file = prefix.with_name(prefix.name + "_points.csv")
        grid_file = prefix.with_name(prefix.name + "_grid.csv")
        with open(points_file, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["role", "label", "x", "y"])
            for role, pts, labels in (("support", support, support_y), ("query", query, query_y)):
                for (x, y), lab in zip(pts, labels):
                    writer.writerow([role, int(lab), repr(float(x)), repr(float(y))])
        with open(grid_file, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "f_inductive", "f_transductive"])
            for (x, y), a, b in zip(grid, f_ind, f_trans):
                writer.writerow([repr(float(x)), repr(float(y)), repr(float(a)), repr(float(b))])
        files = [points_file, grid_file]

    shape = (grid_size, grid_size)
    n_ind = boundary_normal_from_grid(xs, ys, f_ind.reshape(shape))
    n_trans = boundary_normal_from_grid(xs, ys, f_trans.reshape(shape))
    nk = len(support)
    err_ind = int(np.sum(np.sign((K @ alpha_ind)[nk:]) != query_y))
    err_trans = int(np.sum(np.sign((K @ alpha_trans)[nk:]) != query_y))
    return Demo2dResult(n_ind, n_trans, angle_between(n_ind, n_trans), err_ind, err_trans, files)


# -- gradient check -------------------------------------------------------------


@dataclass
class GradcheckReport:
    trials: int
    max_error: float
    worst_trial: int
    worst_index: int
    passed: bool

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}: max relative gradient error {self.max_error:.3e} over {self.trials} trials "
            f"(worst: trial {self.worst_trial}, coordinate {self.worst_index}; tolerance {GRADCHECK_TOL:g})"
        )


def random_problem(rng: np.random.Generator, lambda2: float | None = None) -> tuple[BinaryProblem, np.ndarray]:
    """Small random problem (NK <= 8, NQ <= 12, D <= 5) plus a random evaluation point."""
    nk = int(rng.integers(2, 9))
    nq = int(rng.integers(1, 13))
    dim = int(rng.integers(1, 6))
    X = rng.standard_normal((nk + nq, dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = np.where(rng.random(nk) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    rng.shuffle(y)
    if lambda2 is None:
        lambda2 = float(rng.choice(TmmcConfig().lambda2_schedule))
    problem = BinaryProblem(
        K=gram_matrix(TmmcConfig().kernel, X), nk=nk, nq=nq, y=y, w=class_weights(y),
        lambda1=0.04, lambda2=lambda2, gamma1=20.0, gamma2=2.0,
    )
    alpha = 0.5 * rng.standard_normal(nk + nq)
    return problem, alpha


def gradcheck(seed: int = 0, trials: int = 50, gradient=objective_gradient, h: float = 1e-6) -> GradcheckReport:
    """Compare the analytic gradient with central differences on random problems.

    ``gradient`` is injectable so a deliberately broken gradient can be
    shown to fail.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    schedule = TmmcConfig().lambda2_schedule
    worst = (-1.0, -1, -1)
    for trial in range(trials):
        problem, alpha = random_problem(rng, schedule[trial % len(schedule)])
        err = relative_gradient_error(gradient(alpha, problem), finite_diff_gradient(alpha, problem, h))
        j = int(np.argmax(err))
        if err[j] > worst[0]:
            worst = (float(err[j]), trial, j)
    return GradcheckReport(trials, worst[0], worst[1], worst[2], worst[0] < GRADCHECK_TOL)
