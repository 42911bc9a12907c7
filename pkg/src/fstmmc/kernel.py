"""Kernel evaluation and Gram matrices for the dual expansion f(x) = sum_i alpha_i k(x_i, x)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_KERNELS = ("linear",)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"

    def __post_init__(self):
        if self.kind not in SUPPORTED_KERNELS:
            raise ValueError(f"unsupported kernel {self.kind!r}")


LINEAR = KernelSpec("linear")


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"kernel arguments must be vectors of equal length, got {x.shape} and {y.shape}")
    return float(x @ y)


def gram_matrix(spec: KernelSpec, xs) -> np.ndarray:
    """Dense ``(M, M)`` matrix ``K[i, j] = k(xs[i], xs[j])``; rows keep the input order."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise ValueError("expected an (M, D) array of feature vectors")
    K = xs @ xs.T
    # BLAS may round the two triangles differently
    return 0.5 * (K + K.T)


def eval_f(alpha, K) -> np.ndarray:
    """Decision values ``K @ alpha`` at every point of the expansion."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or K.shape != (alpha.size, alpha.size):
        raise ValueError(f"alpha of length {alpha.size} does not match kernel matrix {K.shape}")
    return K @ alpha


def eval_f_at(alpha, xs, points, spec: KernelSpec = LINEAR) -> np.ndarray:
    """Decision values at arbitrary ``points`` given the expansion points ``xs``."""
    xs = np.asarray(xs, dtype=np.float64)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return points @ (xs.T @ np.asarray(alpha, dtype=np.float64))
