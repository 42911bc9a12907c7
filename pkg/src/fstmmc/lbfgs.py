"""Limited-memory BFGS with a strong Wolfe line search.

The minimizer works on any callable returning ``(value, gradient)``.  The
dense inverse-Hessian update is kept alongside the two-loop recursion so the
limited-memory path can be checked against it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

ValueAndGrad = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

CURVATURE_EPS = 1e-10
# relative size of objective differences treated as rounding noise
F_NOISE = 1e-12


class CurvatureError(ValueError):
    """A step/gradient-difference pair with w's <= eps * |s| |w|."""


class LineSearchError(RuntimeError):
    """No strong Wolfe point was found within the evaluation budget.

    ``best`` is ``(step, value, gradient)`` for the lowest point seen that
    satisfies sufficient decrease, or None when there was none.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class OptimizationError(RuntimeError):
    """The objective produced NaN; ``x`` and ``iteration`` locate where."""

    def __init__(self, message: str, x: np.ndarray, iteration: int):
        super().__init__(message)
        self.x = x
        self.iteration = iteration


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    grad_tol: float = 1e-6
    max_iters: int = 500
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search: int = 30

    def __post_init__(self):
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1 or self.max_iters < 0 or self.max_line_search < 1:
            raise ValueError("memory and max_line_search must be positive, max_iters non-negative")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class CurvaturePair:
    s: np.ndarray
    w: np.ndarray
    rho: float = field(init=False)

    def __post_init__(self):
        sw = float(self.w @ self.s)
        if not satisfies_curvature(self.s, self.w, sw):
            raise CurvatureError(f"curvature condition violated (w's = {sw:.3e})")
        object.__setattr__(self, "rho", 1.0 / sw)


@dataclass
class OptimResult:
    x_final: np.ndarray
    f_final: float
    grad_norm: float
    iterations: int
    converged: bool
    line_search_failures: int = 0
    f_initial: float = math.nan
    evaluations: int = 0


def satisfies_curvature(s: np.ndarray, w: np.ndarray, sw: float | None = None) -> bool:
    if sw is None:
        sw = float(w @ s)
    return sw > CURVATURE_EPS * math.sqrt(float(s @ s) * float(w @ w))


def dense_bfgs_update(H: np.ndarray, pair: CurvaturePair) -> np.ndarray:
    """H+ = (I - rho s w') H (I - rho w s') + rho s s'."""
    s, w, rho = pair.s, pair.w, pair.rho
    V = np.eye(s.size) - rho * np.outer(s, w)
    H_next = V @ H @ V.T + rho * np.outer(s, s)
    return 0.5 * (H_next + H_next.T)


def initial_scaling(history: Sequence[CurvaturePair]) -> float:
    if not history:
        return 1.0
    last = history[-1]
    return float(last.s @ last.w) / float(last.w @ last.w)


def two_loop_direction(history: Iterable[CurvaturePair], grad: np.ndarray) -> np.ndarray:
    """-H grad for the implicit L-BFGS matrix built from ``history`` (oldest first)."""
    history = list(history)
    return _two_loop([p.s for p in history], [p.w for p in history], [p.rho for p in history], grad)


def _two_loop(S: list, W: list, rho: list, grad: np.ndarray) -> np.ndarray:
    q = np.array(grad, dtype=np.float64)
    k = len(S)
    coeffs = [0.0] * k
    for i in range(k - 1, -1, -1):
        a = rho[i] * float(S[i] @ q)
        q -= a * W[i]
        coeffs[i] = a
    if k:
        q *= float(S[-1] @ W[-1]) / float(W[-1] @ W[-1])
    for i in range(k):
        b = rho[i] * float(W[i] @ q)
        q += (coeffs[i] - b) * S[i]
    return -q


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic matching values and slopes at a and b, or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0.0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if math.isfinite(t) else None


def _strong_wolfe(fg: ValueAndGrad, x, d, f0, dphi0, cfg: LbfgsConfig, t_init=1.0):
    """Bracket then zoom; returns ``(t, f, g, evaluations)``."""
    c1, c2 = cfg.wolfe_c1, cfg.wolfe_c2
    budget = cfg.max_line_search
    evals = 0
    best = None
    noise = F_NOISE * (1.0 + abs(f0))

    def phi(t):
        nonlocal evals, best
        evals += 1
        f, g = fg(x + t * d)
        if math.isnan(f) or (math.isfinite(f) and not np.all(np.isfinite(g))):
            raise OptimizationError(f"objective returned NaN at step {t:g}", x + t * d, -1)
        # f = +inf means the trial step overshot; zoom bisects back
        dphi = float(g @ d) if math.isfinite(f) else math.nan
        if sufficient(t, f, dphi) and (best is None or f < best[1]):
            best = (t, f, g)
        return f, g, dphi

    def sufficient(t, f, dphi):
        if f <= f0 + c1 * t * dphi0:
            return True
        # once the predicted decrease is below rounding noise in f, judge it
        # from the slope instead (approximate Wolfe test)
        return f <= f0 + noise and dphi <= (2.0 * c1 - 1.0) * dphi0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        while evals < budget:
            width = hi - lo
            t = None
            if math.isfinite(f_hi) and math.isfinite(d_hi):
                t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1 * abs(width)
            if t is None or not left + margin <= t <= right - margin:
                t = 0.5 * (lo + hi)
            if t == lo or t == hi:
                break
            f, g, dphi = phi(t)
            if not sufficient(t, f, dphi) or f > f_lo + noise:
                hi, f_hi, d_hi = t, f, dphi
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return t, f, g
                if dphi * (hi - lo) >= 0.0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = t, f, dphi
        raise LineSearchError("zoom exhausted", best)

    t_prev, f_prev, d_prev = 0.0, f0, dphi0
    t = t_init
    first = True
    while evals < budget:
        f, g, dphi = phi(t)
        if not sufficient(t, f, dphi) or (not first and f > f_prev + noise):
            t, f, g = zoom(t_prev, f_prev, d_prev, t, f, dphi)
            return t, f, g, evals
        if abs(dphi) <= -c2 * dphi0:
            return t, f, g, evals
        if dphi >= 0.0:
            t, f, g = zoom(t, f, dphi, t_prev, f_prev, d_prev)
            return t, f, g, evals
        t_prev, f_prev, d_prev = t, f, dphi
        t *= 2.0
        first = False
    raise LineSearchError("bracketing exhausted", best)


def wolfe_line_search(objective_and_gradient: ValueAndGrad, x, d, f0: float, g0: float, cfg: LbfgsConfig) -> float:
    """Step satisfying the strong Wolfe conditions along descent direction ``d``.

    ``g0`` is the directional derivative grad F(x)'d.  Raises LineSearchError
    when the evaluation budget runs out.
    """
    if not g0 < 0.0:
        raise ValueError(f"d is not a descent direction (slope {g0:g})")
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    t, _, _, _ = _strong_wolfe(objective_and_gradient, x, d, float(f0), float(g0), cfg)
    return t


def minimize(
    objective_and_gradient: ValueAndGrad,
    x0,
    cfg: LbfgsConfig = LbfgsConfig(),
    callback: Callable[[np.ndarray], None] | None = None,
) -> OptimResult:
    """L-BFGS from ``x0``.

    Stops when ``|grad| <= grad_tol * max(1, |x|)``, after ``max_iters``
    iterations, or when a line search finds no sufficient-decrease point.
    ``callback(x)`` is called after every accepted step.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = objective_and_gradient(x)
    evals = 1
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise OptimizationError("objective is not finite at the starting point", x, 0)
    f_initial = f
    # curvature pairs kept as parallel deques (oldest first)
    S: deque[np.ndarray] = deque(maxlen=cfg.memory)
    W: deque[np.ndarray] = deque(maxlen=cfg.memory)
    rho: deque[float] = deque(maxlen=cfg.memory)
    iterations = failures = 0
    gnorm = math.sqrt(float(g @ g))

    while gnorm > cfg.grad_tol * max(1.0, math.sqrt(float(x @ x))):
        if iterations >= cfg.max_iters:
            break
        d = _two_loop(S, W, rho, g)
        dphi0 = float(g @ d)
        if not dphi0 < 0.0:
            S.clear()
            W.clear()
            rho.clear()
            d = -g
            dphi0 = -gnorm * gnorm
        try:
            t, f_new, g_new, n = _strong_wolfe(objective_and_gradient, x, d, f, dphi0, cfg)
            evals += n
        except LineSearchError as exc:
            failures += 1
            evals += cfg.max_line_search
            if exc.best is None:
                break
            t, f_new, g_new = exc.best
        except OptimizationError as exc:
            raise OptimizationError(str(exc), exc.x, iterations) from None
        s = t * d
        w = g_new - g
        sw = float(w @ s)
        if satisfies_curvature(s, w, sw):
            S.append(s)
            W.append(w)
            rho.append(1.0 / sw)
        x = x + s
        f, g = f_new, g_new
        gnorm = math.sqrt(float(g @ g))
        iterations += 1
        if callback is not None:
            callback(x)

    converged = gnorm <= cfg.grad_tol * max(1.0, math.sqrt(float(x @ x)))
    return OptimResult(
        x_final=x,
        f_final=float(f),
        grad_norm=gnorm,
        iterations=iterations,
        converged=converged,
        line_search_failures=failures,
        f_initial=float(f_initial),
        evaluations=evals,
    )
