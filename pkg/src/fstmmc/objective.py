"""Smoothed transductive max-margin objective in the dual coefficients.

For a kernel matrix ``K`` over NK support points followed by NQ query
points, decision values are ``f = K @ alpha`` and

    F(alpha) = lambda1/2 * alpha' K alpha
             + 1/NK * sum_i w_i/gamma1 * log(1 + exp(gamma1 * (1 - y_i f_i)))
             + lambda2/NQ * sum_j exp(-gamma2 * f_{NK+j}^2)

with gradient ``K @ (lambda1 * alpha + t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class BinaryProblem:
    """One one-vs-rest subproblem; ``K`` rows are support points then query points."""

    K: np.ndarray
    nk: int
    nq: int
    y: np.ndarray
    w: np.ndarray
    lambda1: float = 0.04
    lambda2: float = 0.0
    gamma1: float = 20.0
    gamma2: float = 2.0

    def __post_init__(self):
        m = self.nk + self.nq
        if self.K.shape != (m, m):
            raise ValueError(f"kernel matrix {self.K.shape} does not match NK + NQ = {m}")
        if self.nk < 1 or self.nq < 0:
            raise ValueError("need at least one support point")
        y = np.asarray(self.y, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if y.shape != (self.nk,) or not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be NK values in {-1, +1}")
        if w.shape != (self.nk,) or not np.all(w > 0):
            raise ValueError("weights must be NK positive values")
        if not (self.lambda1 > 0 and self.gamma1 > 0 and self.gamma2 > 0 and self.lambda2 >= 0):
            raise ValueError("need lambda1, gamma1, gamma2 > 0 and lambda2 >= 0")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.nk + self.nq

    def with_lambda2(self, lambda2: float) -> "BinaryProblem":
        return replace(self, lambda2=float(lambda2))


def surrogate_hinge(u, gamma1: float):
    """Smooth upper bound of max(0, 1 - u): log(1 + exp(gamma1 (1 - u))) / gamma1.

    Written as ``max(0, d) + log1p(exp(-gamma1 |d|)) / gamma1`` with
    ``d = 1 - u``: stable for any margin, and the second term lies in
    ``[0, log 2 / gamma1]`` so the bracketing bounds hold in floating point.
    """
    d = 1.0 - np.asarray(u, dtype=np.float64)
    return np.maximum(d, 0.0) + np.log1p(np.exp(-gamma1 * np.abs(d))) / gamma1


def surrogate_symmetric(fval, gamma2: float):
    """exp(-gamma2 f^2), the smooth stand-in for max(0, 1 - |f|)."""
    fval = np.asarray(fval, dtype=np.float64)
    return np.exp(-gamma2 * fval * fval)


def _check_alpha(alpha, p: BinaryProblem) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (p.m,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({p.m},)")
    # cheap scalar test first; the elementwise scan only runs on overflow/NaN
    if not math.isfinite(float(alpha @ alpha)) and not np.all(np.isfinite(alpha)):
        raise ValueError("alpha contains non-finite entries")
    return alpha


def _value(alpha: np.ndarray, f: np.ndarray, p: BinaryProblem) -> float:
    fs = f[: p.nk]
    value = 0.5 * p.lambda1 * float(alpha @ f)
    value += float(p.w @ surrogate_hinge(p.y * fs, p.gamma1)) / p.nk
    if p.nq and p.lambda2:
        value += p.lambda2 * float(np.mean(surrogate_symmetric(f[p.nk :], p.gamma2)))
    return value


def _t_vector(f: np.ndarray, p: BinaryProblem) -> np.ndarray:
    t = np.zeros(p.m)
    # o_i / p_i written as a logistic so large exponents cannot overflow
    t[: p.nk] = -p.w * p.y * expit(p.gamma1 * (1.0 - p.y * f[: p.nk])) / p.nk
    if p.nq and p.lambda2:
        fq = f[p.nk :]
        t[p.nk :] = -2.0 * p.gamma2 * p.lambda2 * fq * np.exp(-p.gamma2 * fq * fq) / p.nq
    return t


def objective_value(alpha, p: BinaryProblem) -> float:
    alpha = _check_alpha(alpha, p)
    return _value(alpha, p.K @ alpha, p)


def objective_gradient(alpha, p: BinaryProblem) -> np.ndarray:
    alpha = _check_alpha(alpha, p)
    f = p.K @ alpha
    return p.K @ (p.lambda1 * alpha + _t_vector(f, p))


def value_and_gradient(alpha, p: BinaryProblem) -> tuple[float, np.ndarray]:
    """``(F(alpha), grad F(alpha))`` sharing one product ``K @ alpha``."""
    alpha = _check_alpha(alpha, p)
    f = p.K @ alpha
    return _value(alpha, f, p), p.K @ (p.lambda1 * alpha + _t_vector(f, p))


def finite_diff_gradient(alpha, p: BinaryProblem, h: float = 1e-6) -> np.ndarray:
    """Central differences with per-coordinate step ``h * (1 + |alpha_j|)``."""
    if h <= 0:
        raise ValueError("h must be positive")
    alpha = np.asarray(alpha, dtype=np.float64)
    grad = np.empty_like(alpha)
    for j in range(alpha.size):
        step = h * (1.0 + abs(alpha[j]))
        hi = alpha.copy()
        lo = alpha.copy()
        hi[j] += step
        lo[j] -= step
        grad[j] = (objective_value(hi, p) - objective_value(lo, p)) / (hi[j] - lo[j])
    return grad


def relative_gradient_error(analytic, reference) -> np.ndarray:
    """Per-coordinate error scaled by the larger gradient's max-norm."""
    analytic = np.asarray(analytic, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    scale = max(np.abs(analytic).max(), np.abs(reference).max(), 1e-8)
    return np.abs(analytic - reference) / scale
