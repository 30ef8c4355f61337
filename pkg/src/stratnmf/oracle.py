"""Reference computations for checking the engine.

Everything here is dense and deliberately naive (explicit loops over Python
floats) so that it shares no kernels with :mod:`stratnmf.engine`:

* the classical Lee-Seung updates for ``||A - W H||_F^2``;
* the stacked system in which stratified NMF is a standard NMF problem:

      A_hat = [A[0]; ...; A[s-1]]
      W_hat = [indicator columns | W[0]; ...; W[s-1]]
      H_hat = [v[0]^T; ...; v[s-1]^T; H]

  so that ``W_hat @ H_hat`` stacks ``1 v[i]^T + W[i] H``. Applying the
  standard ``H_hat`` update to it reproduces the shift and topics updates.

The ``W`` rule has no such derivation (the indicator columns are fixed), so
it is checked only through monotonicity and the ``s = 1, v = 0`` reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Model, StrataDataset
from .matrix import ShapeError, to_dense


def _rows(x) -> list:
    return [[float(e) for e in row] for row in np.asarray(x, dtype=np.float64)]


def _matmul(a: list, b: list) -> list:
    n_inner = len(b)
    if a and len(a[0]) != n_inner:
        raise ShapeError(f"cannot multiply {len(a)}x{len(a[0])} by {n_inner}x...")
    n_cols = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [0.0] * n_cols
        for k in range(n_inner):
            aik = row[k]
            bk = b[k]
            for j in range(n_cols):
                acc[j] += aik * bk[j]
        out.append(acc)
    return out


def _transpose(a: list) -> list:
    return [list(col) for col in zip(*a)]


def _mul_div(x: list, num: list, den: list, eps: float) -> list:
    out = []
    for xr, nr, dr in zip(x, num, den):
        out.append([
            0.0 if xe == 0.0 else xe * ne / (de + eps)
            for xe, ne, de in zip(xr, nr, dr)
        ])
    return out


def _check(A, W, H):
    A = to_dense(A)
    W, H = (np.asarray(m, dtype=np.float64) for m in (W, H))
    if W.shape[0] != A.shape[0] or H.shape[1] != A.shape[1] or W.shape[1] != H.shape[0]:
        raise ShapeError(f"inconsistent shapes A{A.shape}, W{W.shape}, H{H.shape}")
    return _rows(A), _rows(W), _rows(H)


def standard_nmf_update_h(A, W, H, eps: float = 0.0) -> np.ndarray:
    """``H * (W^T A) / (W^T W H + eps)``."""
    a, w, h = _check(A, W, H)
    wt = _transpose(w)
    num = _matmul(wt, a)
    den = _matmul(_matmul(wt, w), h)
    return np.array(_mul_div(h, num, den, eps))


def standard_nmf_update_w(A, W, H, eps: float = 0.0) -> np.ndarray:
    """``W * (A H^T) / (W H H^T + eps)``."""
    a, w, h = _check(A, W, H)
    ht = _transpose(h)
    num = _matmul(a, ht)
    den = _matmul(_matmul(w, h), ht)
    return np.array(_mul_div(w, num, den, eps))


def frobenius_sq(A, W, H) -> float:
    """``||A - W H||_F^2`` by explicit loops."""
    a, w, h = _check(A, W, H)
    wh = _matmul(w, h)
    return sum((x - y) ** 2 for ra, rb in zip(a, wh) for x, y in zip(ra, rb))


@dataclass(frozen=True)
class BlockSystem:
    """Stacked matrices; the first ``n_strata`` columns of ``W_hat`` are indicators."""

    A_hat: np.ndarray
    W_hat: np.ndarray
    H_hat: np.ndarray
    n_strata: int

    def split_h(self, H_hat=None) -> tuple:
        """Undo the stacking of ``H_hat`` into ``(v list, H)``."""
        H_hat = self.H_hat if H_hat is None else np.asarray(H_hat)
        s = self.n_strata
        return [H_hat[i].copy() for i in range(s)], H_hat[s:].copy()

    def objective(self) -> float:
        return frobenius_sq(self.A_hat, self.W_hat, self.H_hat)


def assemble_block(dataset: StrataDataset, model: Model) -> BlockSystem:
    model.check_compatible(dataset)
    s, r, n = dataset.n_strata, model.rank, dataset.n_cols
    a_rows, w_rows = [], []
    for i, (A, Wi) in enumerate(zip(dataset.strata, model.W)):
        indicator = [0.0] * s
        indicator[i] = 1.0
        for row_a, row_w in zip(_rows(to_dense(A)), _rows(Wi)):
            a_rows.append(row_a)
            w_rows.append(indicator + row_w)
    h_rows = [[float(e) for e in vi] for vi in model.v] + _rows(model.H)
    A_hat = np.array(a_rows).reshape(-1, n)
    W_hat = np.array(w_rows).reshape(-1, s + r)
    H_hat = np.array(h_rows).reshape(s + r, n)
    return BlockSystem(A_hat=A_hat, W_hat=W_hat, H_hat=H_hat, n_strata=s)


def block_vh_update(dataset: StrataDataset, model: Model, eps: float = 0.0) -> tuple:
    """Standard ``H_hat`` update on the stacked system, split into ``(v, H)``."""
    block = assemble_block(dataset, model)
    H_hat = standard_nmf_update_h(block.A_hat, block.W_hat, block.H_hat, eps)
    return block.split_h(H_hat)
