import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from liouville_dmd import KernelSpec, eval_kernel, eval_matrix
from liouville_dmd.errors import InvalidInputError, NumericRangeError

KERNELS = [KernelSpec.gaussian(1.0), KernelSpec.gaussian(3.5), KernelSpec.expdot(2.0), KernelSpec.expdot(50.0)]
coords = st.floats(-3, 3, allow_nan=False)


def test_gaussian_diagonal_is_one():
    assert eval_kernel(KernelSpec.gaussian(1.0), [3, -2], [3, -2]) == 1.0


def test_expdot_orthogonal_origin():
    assert eval_kernel(KernelSpec.expdot(1.0), [0, 0], [5, 7]) == 1.0


def test_gaussian_against_mpmath():
    expected = float(mpmath.exp(mpmath.mpf(-1) / 2))
    assert eval_kernel(KernelSpec.gaussian(2.0), [1, 0], [0, 0]) == pytest.approx(expected, rel=1e-15)


def test_expdot_includes_width():
    x, y = np.array([0.3, -1.2]), np.array([2.0, 0.5])
    expected = float(mpmath.exp(mpmath.mpf(float(x @ y)) / 4))
    assert eval_kernel(KernelSpec.expdot(4.0), x, y) == pytest.approx(expected, rel=1e-14)


def test_matrix_examples():
    k = KernelSpec.gaussian(1.0)
    assert eval_matrix(k, [[0.4, 1.0]], [[0.4, 1.0]]).tolist() == [[1.0]]
    np.testing.assert_allclose(eval_matrix(k, [[0.0], [1.0]], [[0.0]]), [[1.0], [np.exp(-1)]], rtol=1e-15)


@pytest.mark.parametrize("kernel", KERNELS)
def test_empty_point_set(kernel):
    out = eval_matrix(kernel, np.empty((0, 2)), np.ones((3, 2)))
    assert out.shape == (0, 3)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        eval_matrix(KernelSpec.gaussian(1.0), np.ones((2, 2)), np.ones((2, 3)))
    with pytest.raises(InvalidInputError):
        eval_kernel(KernelSpec.gaussian(1.0), [1, 2], [1, 2, 3])


@pytest.mark.parametrize("mu", [0.0, -1.0, float("nan"), float("inf")])
def test_width_must_be_positive(mu):
    with pytest.raises(InvalidInputError):
        KernelSpec.gaussian(mu)


def test_unknown_kind():
    with pytest.raises(InvalidInputError):
        KernelSpec("laplace", 1.0)


def test_expdot_overflow_raises():
    k = KernelSpec.expdot(1.0)
    with pytest.raises(NumericRangeError):
        eval_kernel(k, [30.0], [30.0])
    with pytest.raises(NumericRangeError):
        eval_matrix(k, [[1.0], [30.0]], [[30.0]])
    assert np.isfinite(eval_kernel(k, [26.0], [26.0]))


def test_dict_round_trip():
    for k in KERNELS:
        assert KernelSpec.from_dict(k.to_dict()) == k


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KERNELS), arrays(float, 3, elements=coords), arrays(float, 3, elements=coords))
def test_symmetry(kernel, x, y):
    assert eval_kernel(kernel, x, y) == eval_kernel(kernel, y, x)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KERNELS), arrays(float, 4, elements=coords))
def test_gaussian_diagonal_exact(kernel, x):
    if kernel.kind == "gaussian":
        assert eval_kernel(kernel, x, x) == 1.0


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(KERNELS), st.integers(1, 10), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_gram_psd(kernel, P, n, seed):
    X = np.random.default_rng(seed).uniform(-2, 2, (P, n))
    K = eval_matrix(kernel, X, X)
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-10 * P


def test_matrix_matches_pointwise():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    for k in KERNELS:
        M = eval_matrix(k, X, Y)
        for i in range(5):
            for j in range(4):
                assert M[i, j] == pytest.approx(eval_kernel(k, X[i], Y[j]), rel=1e-13)
