import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstmmc.kernel import LINEAR, KernelSpec, eval_f, eval_f_at, gram_matrix, kernel_eval
from oracles import naive_kernel_product


def test_kernel_eval_examples():
    assert kernel_eval(LINEAR, [1, 0], [0, 1]) == 0.0
    x = np.array([0.6, 0.8])
    assert kernel_eval(LINEAR, x, x) == pytest.approx(1.0, abs=1e-15)
    assert kernel_eval(LINEAR, [1, 2, 3], [4, 5, 6]) == 32.0


def test_kernel_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        kernel_eval(LINEAR, [1, 2], [1, 2, 3])


def test_unknown_kernel_rejected():
    with pytest.raises(ValueError):
        KernelSpec("rbf")


def test_gram_identity_and_duplicates():
    np.testing.assert_array_equal(gram_matrix(LINEAR, np.eye(4)), np.eye(4))
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 5))
    K = gram_matrix(LINEAR, np.vstack([x, x]))
    assert abs(np.linalg.eigvalsh(K).min()) < 1e-8


def test_gram_dimension_mismatch():
    with pytest.raises(ValueError):
        gram_matrix(LINEAR, [np.zeros(2), np.zeros(3)])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_gram_properties(m, dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((m, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    K = gram_matrix(LINEAR, x)
    assert np.abs(K - K.T).max() <= 1e-12
    np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-9)
    assert np.linalg.eigvalsh(K).min() >= -1e-8
    for i in range(m):
        for j in range(m):
            assert K[i, j] == pytest.approx(kernel_eval(LINEAR, x[i], x[j]), abs=1e-14)
    perm = rng.permutation(m)
    np.testing.assert_allclose(gram_matrix(LINEAR, x[perm]), K[np.ix_(perm, perm)], atol=1e-14)
    alpha = rng.standard_normal(m)
    np.testing.assert_allclose(eval_f(alpha, K), naive_kernel_product(K, alpha), atol=1e-12)


def test_eval_f_examples():
    K = np.eye(3)
    alpha = np.array([0.5, -1.0, 2.0])
    np.testing.assert_array_equal(eval_f(alpha, K), alpha)
    np.testing.assert_array_equal(eval_f(np.zeros(3), np.ones((3, 3))), np.zeros(3))
    with pytest.raises(ValueError):
        eval_f(np.zeros(2), K)


def test_eval_f_random_symmetric_oracle():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 4))
    K = A + A.T
    alpha = rng.standard_normal(4)
    np.testing.assert_allclose(eval_f(alpha, K), naive_kernel_product(K, alpha), atol=1e-12)


def test_eval_f_at_new_points():
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((5, 3))
    alpha = rng.standard_normal(5)
    pts = rng.standard_normal((7, 3))
    expected = [sum(alpha[i] * float(xs[i] @ p) for i in range(5)) for p in pts]
    np.testing.assert_allclose(eval_f_at(alpha, xs, pts), expected, atol=1e-12)


def test_gram_build_time():
    x = np.random.default_rng(0).standard_normal((100, 640))
    gram_matrix(LINEAR, x)
    start = time.perf_counter()
    gram_matrix(LINEAR, x)
    assert time.perf_counter() - start < 0.05
