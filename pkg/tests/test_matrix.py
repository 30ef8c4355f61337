import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import sparse as sp

from stratnmf.matrix import (
    NegativeEntryError,
    ShapeError,
    column_sums,
    dense,
    elementwise_mul_div,
    matmul,
    sparse,
    squared_norm,
)


def test_matmul_identity():
    out = matmul(dense([[1.0, 0.0], [0.0, 1.0]]), dense([[5.0, 6.0], [7.0, 8.0]]))
    np.testing.assert_array_equal(out, [[5.0, 6.0], [7.0, 8.0]])


def test_matmul_row_by_column():
    np.testing.assert_array_equal(matmul(dense([[1.0, 2.0]]), dense([[3.0], [4.0]])), [[11.0]])


def test_matmul_sparse_left():
    S = sparse([[0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_array_equal(matmul(S, dense([[1.0], [1.0]])), [[2.0], [0.0]])


def test_matmul_sparse_right():
    S = sparse([[0.0, 2.0], [3.0, 0.0]])
    np.testing.assert_array_equal(matmul(dense([[1.0, 1.0]]), S), [[3.0, 2.0]])


def test_matmul_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@pytest.mark.parametrize(
    "A, expected",
    [
        (dense([[1.0, 2.0], [3.0, 4.0]]), [4.0, 6.0]),
        (dense(np.zeros((2, 3))), [0.0, 0.0, 0.0]),
        (sparse(sp.coo_array(([5.0], ([1], [1])), shape=(2, 2))), [0.0, 5.0]),
    ],
)
def test_column_sums(A, expected):
    np.testing.assert_array_equal(column_sums(A), expected)


@pytest.mark.parametrize(
    "x, num, den, eps, expected",
    [
        (2.0, 3.0, 3.0, 0.0, 2.0),
        (1.0, 4.0, 2.0, 0.0, 2.0),
        (0.0, 9.0, 0.0, 1e-9, 0.0),
        (0.0, 9.0, 0.0, 0.0, 0.0),
    ],
)
def test_elementwise_mul_div(x, num, den, eps, expected):
    out = elementwise_mul_div(np.array([[x]]), np.array([[num]]), np.array([[den]]), eps)
    assert out[0, 0] == expected


def test_elementwise_mul_div_shape_mismatch():
    with pytest.raises(ShapeError):
        elementwise_mul_div(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 1)), 0.0)


def test_negative_rejected_dense():
    with pytest.raises(NegativeEntryError, match=r"\(0, 1\)"):
        dense([[1.0, -2.0]])


def test_negative_rejected_sparse():
    with pytest.raises(NegativeEntryError):
        sparse([[0.0, -1.0]])


def test_nan_rejected():
    with pytest.raises(NegativeEntryError):
        dense([np.nan])


def test_sparse_is_canonical():
    coo = sp.coo_array(([1.0, 2.0, 0.0, 4.0], ([0, 0, 1, 1], [1, 1, 0, 0])), shape=(2, 2))
    S = sparse(coo)
    assert np.all(S.data > 0)
    assert S.has_canonical_format
    np.testing.assert_array_equal(S.toarray(), [[0.0, 3.0], [4.0, 0.0]])


# ---------------------------------------------------------------- properties

nonneg = st.floats(min_value=0.0, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def sparse_and_dense(draw):
    rows = draw(st.integers(1, 8))
    cols = draw(st.integers(1, 8))
    k = draw(st.integers(1, 5))
    D = draw(arrays(np.float64, (rows, cols), elements=nonneg))
    mask = draw(arrays(np.bool_, (rows, cols)))
    D = np.where(mask, D, 0.0)
    B = draw(arrays(np.float64, (cols, k), elements=nonneg))
    C = draw(arrays(np.float64, (k, rows), elements=nonneg))
    return D, B, C


@settings(max_examples=200, deadline=None)
@given(sparse_and_dense())
def test_sparse_dense_agreement(case):
    D, B, C = case
    S = sparse(D)
    np.testing.assert_allclose(matmul(S, B), matmul(D, B), rtol=1e-12, atol=0)
    np.testing.assert_allclose(matmul(C, S), matmul(C, D), rtol=1e-12, atol=0)
    np.testing.assert_allclose(column_sums(S), column_sums(D), rtol=1e-12, atol=0)
    assert squared_norm(S) == pytest.approx(squared_norm(D), rel=1e-12, abs=0)


@settings(max_examples=200, deadline=None)
@given(sparse_and_dense())
def test_nonnegative_closure(case):
    D, B, C = case
    assert np.all(matmul(D, B) >= 0)
    assert np.all(matmul(C, sparse(D)) >= 0)
    assert np.all(matmul(sparse(D), B) >= 0)
    assert np.all(column_sums(D) >= 0)


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, (3, 4), elements=nonneg),
    arrays(np.float64, (3, 4), elements=nonneg),
    arrays(np.float64, (3, 4), elements=nonneg),
    st.sampled_from([0.0, 1e-9]),
)
def test_mul_div_zero_absorption(x, num, den, eps):
    x = x.copy()
    x[0, :] = 0.0
    out = elementwise_mul_div(x, num, den, eps)
    assert np.all(out[0] == 0.0)
    finite = np.isfinite(out)
    assert np.all(out[finite] >= 0)
