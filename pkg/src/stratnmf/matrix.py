"""Non-negative dense/sparse storage and the kernels used by the update rules.

Dense matrices are plain float64 ``numpy`` arrays. Sparse matrices are
``scipy.sparse.csr_array`` instances in canonical form (sorted indices, no
duplicates, no stored zeros). Both are validated on construction: negative
entries are rejected rather than clamped.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy import sparse as sp

Array = np.ndarray
Matrix = Union[np.ndarray, sp.csr_array]


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class NegativeEntryError(ValueError):
    """A value that must be non-negative is negative (or not finite)."""


def is_sparse(x) -> bool:
    return sp.issparse(x)


def _first_bad(values: Array) -> tuple | None:
    bad = ~(np.isfinite(values) & (values >= 0))
    if not bad.any():
        return None
    return tuple(int(i) for i in np.argwhere(bad)[0])


def dense(x, name: str = "matrix") -> Array:
    """Validate ``x`` as a non-negative float64 array (1-D or 2-D).

    Returns a C-contiguous array; the input is copied only if needed.
    """
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ShapeError(f"{name} must be 1-D or 2-D, got {arr.ndim}-D")
    where = _first_bad(arr)
    if where is not None:
        raise NegativeEntryError(
            f"{name} has invalid entry {arr[where]!r} at index {where}"
        )
    return arr


def sparse(x, shape: tuple[int, int] | None = None, name: str = "matrix") -> sp.csr_array:
    """Validate ``x`` as a canonical non-negative CSR array.

    Explicit zeros are dropped, duplicates summed and column indices sorted,
    so every stored value is strictly positive.
    """
    mat = sp.csr_array(x, shape=shape, dtype=np.float64, copy=True)
    mat.sum_duplicates()
    where = _first_bad(mat.data)
    if where is not None:
        k = where[0]
        row = int(np.searchsorted(mat.indptr, k, side="right") - 1)
        raise NegativeEntryError(
            f"{name} has invalid entry {mat.data[k]!r} at index {(row, int(mat.indices[k]))}"
        )
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def as_matrix(x, name: str = "matrix") -> Matrix:
    """Validate a data matrix, keeping sparse input sparse."""
    if is_sparse(x):
        return sparse(x, name=name)
    arr = dense(x, name=name)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def to_dense(x: Matrix) -> Array:
    if is_sparse(x):
        return x.toarray()
    return np.asarray(x, dtype=np.float64)


def matmul(a: Matrix, b: Matrix) -> Array:
    """Dense product ``a @ b``; either operand may be sparse (not both)."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if is_sparse(a) and is_sparse(b):
        return (a @ b).toarray()
    if is_sparse(b):
        # (B^T A^T)^T keeps the sparse operand on the left
        return np.ascontiguousarray((b.T @ np.asarray(a).T).T)
    return np.asarray(a @ b)


def column_sums(a: Matrix) -> Array:
    """Sum over rows, i.e. ``a.T @ ones``."""
    return np.asarray(a.sum(axis=0), dtype=np.float64).ravel()


def squared_norm(a: Matrix) -> float:
    """Squared Frobenius norm."""
    values = a.data if is_sparse(a) else np.asarray(a)
    return float(np.dot(values.ravel(), values.ravel()))


def elementwise_mul_div(x: Array, num: Array, den: Array, eps: float) -> Array:
    """Multiplicative update ``x * num / (den + eps)``, elementwise.

    Entries where ``x`` is zero stay exactly zero, even when ``den + eps`` is
    zero.
    """
    if not (x.shape == num.shape == den.shape):
        raise ShapeError(f"shape mismatch: {x.shape}, {num.shape}, {den.shape}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    guarded = den + eps
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = x * num / guarded
    if eps == 0:
        out[x == 0] = 0.0
    return out
