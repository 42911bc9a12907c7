"""Platt scaling: a two-parameter logistic map from decision values to probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

PENALTY = 1e-6
MAX_NEWTON_ITERS = 100

_P_MIN = np.finfo(np.float64).tiny
_P_MAX = np.nextafter(1.0, 0.0)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class PlattCalibrator:
    """p(s) = 1 / (1 + exp(a*s + b)); ``a < 0`` when larger scores mean class 1."""

    a: float
    b: float
    iterations: int = 0

    def log_odds(self, score):
        return -(self.a * np.asarray(score, dtype=np.float64) + self.b)

    def __call__(self, score):
        return platt_predict(self, score)


def platt_predict(cal: PlattCalibrator, score):
    # clipped so saturated scores still land strictly inside (0, 1)
    p = np.clip(expit(cal.log_odds(score)), _P_MIN, _P_MAX)
    return float(p) if np.ndim(p) == 0 else p


def penalized_nll(a: float, b: float, scores, targets, penalty: float = PENALTY) -> float:
    z = a * scores + b
    loss = targets * np.logaddexp(0.0, z) + (1.0 - targets) * np.logaddexp(0.0, -z)
    return float(loss.sum()) + 0.5 * penalty * (a * a + b * b)


def fit_platt(scores, targets, penalty: float = PENALTY, max_iters: int = MAX_NEWTON_ITERS) -> PlattCalibrator:
    """Penalized maximum-likelihood fit with raw 0/1 targets.

    Newton's method on (a, b) with an L2 penalty ``penalty/2 * (a^2 + b^2)``
    and step halving, so perfectly separated scores still give finite
    parameters.
    """
    scores = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if scores.shape != targets.shape or scores.ndim != 1:
        raise CalibrationError("scores and targets must be 1-D arrays of equal length")
    if not np.all((targets == 0.0) | (targets == 1.0)):
        raise CalibrationError("targets must be 0 or 1")
    n1 = float(targets.sum())
    n0 = targets.size - n1
    if n1 == 0 or n0 == 0:
        raise CalibrationError("calibration needs both target values")

    a, b = 0.0, float(np.log((n0 + 1.0) / (n1 + 1.0)))
    loss = penalized_nll(a, b, scores, targets, penalty)
    it = 0
    for it in range(1, max_iters + 1):
        p = expit(-(a * scores + b))
        r = targets - p
        v = p * (1.0 - p)
        grad = np.array([r @ scores + penalty * a, r.sum() + penalty * b])
        if np.abs(grad).max() < 1e-12:
            break
        hess = np.array(
            [[v @ (scores * scores) + penalty, v @ scores], [v @ scores, v.sum() + penalty]]
        )
        step = np.linalg.solve(hess, grad)
        slope = float(grad @ step)
        t = 1.0
        while t > 1e-10:
            a_new, b_new = a - t * step[0], b - t * step[1]
            loss_new = penalized_nll(a_new, b_new, scores, targets, penalty)
            if loss_new <= loss - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        a, b, loss = a_new, b_new, loss_new
    return PlattCalibrator(float(a), float(b), it)
