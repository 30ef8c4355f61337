"""Stratified NMF by multiplicative updates.

Each stratum ``i`` has a data matrix ``A[i]`` (``m_i x n``, dense or sparse)
and is approximated as

    A[i] ~ 1 v[i]^T + W[i] H

with a per-stratum shift ``v[i] >= 0`` (length ``n``), per-stratum
coefficients ``W[i] >= 0`` (``m_i x r``) and a topics matrix ``H >= 0``
(``r x n``) shared by all strata. The objective

    sum_i ||A[i] - 1 v[i]^T - W[i] H||_F^2

is non-increasing under each of the three update rules below.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np

from .matrix import (
    Array,
    Matrix,
    ShapeError,
    as_matrix,
    column_sums,
    dense,
    elementwise_mul_div,
    is_sparse,
    matmul,
    squared_norm,
)

logger = logging.getLogger(__name__)

#: Generator algorithm behind ``numpy.random.default_rng``; recorded in saved models.
RNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class StrataDataset:
    """Ordered strata ``A[0..s-1]`` sharing the column dimension ``n``."""

    strata: tuple
    names: tuple = ()

    def __post_init__(self):
        strata = tuple(
            as_matrix(a, name=f"stratum {i}") for i, a in enumerate(self.strata)
        )
        if not strata:
            raise ValueError("a dataset needs at least one stratum")
        n = strata[0].shape[1]
        for i, a in enumerate(strata):
            if a.shape[0] < 1:
                raise ShapeError(f"stratum {i} has no rows")
            if a.shape[1] != n:
                raise ShapeError(
                    f"stratum {i} has {a.shape[1]} columns, stratum 0 has {n}"
                )
        names = tuple(str(x) for x in self.names) or tuple(
            f"stratum_{i}" for i in range(len(strata))
        )
        if len(names) != len(strata):
            raise ValueError(f"{len(names)} names for {len(strata)} strata")
        if len(set(names)) != len(names):
            raise ValueError(f"stratum names must be unique: {names}")
        for a in strata:
            if not is_sparse(a):
                a.flags.writeable = False
        object.__setattr__(self, "strata", strata)
        object.__setattr__(self, "names", names)

    @property
    def n_strata(self) -> int:
        return len(self.strata)

    @property
    def n_cols(self) -> int:
        return self.strata[0].shape[1]

    @property
    def rows(self) -> tuple:
        return tuple(a.shape[0] for a in self.strata)

    @cached_property
    def col_sums(self) -> tuple:
        """``A[i]^T 1`` per stratum; constant for the whole fit."""
        return tuple(column_sums(a) for a in self.strata)

    @cached_property
    def total_squared_norm(self) -> float:
        return float(sum(squared_norm(a) for a in self.strata))


@dataclass(frozen=True)
class Model:
    """Parameters ``v[i]``, ``W[i]`` and the shared ``H``; arrays are read-only."""

    v: tuple
    W: tuple
    H: Array

    def __post_init__(self):
        H = dense(self.H, name="H").copy()
        if H.ndim != 2:
            raise ShapeError(f"H must be 2-D, got shape {H.shape}")
        r, n = H.shape
        if len(self.v) != len(self.W):
            raise ShapeError(f"{len(self.v)} shift vectors for {len(self.W)} W blocks")
        v = tuple(dense(x, name=f"v[{i}]").copy() for i, x in enumerate(self.v))
        W = tuple(dense(x, name=f"W[{i}]").copy() for i, x in enumerate(self.W))
        for i, (vi, Wi) in enumerate(zip(v, W)):
            if vi.shape != (n,):
                raise ShapeError(f"v[{i}] has shape {vi.shape}, expected ({n},)")
            if Wi.ndim != 2 or Wi.shape[1] != r:
                raise ShapeError(f"W[{i}] has shape {Wi.shape}, expected (m, {r})")
        for arr in (H, *v, *W):
            arr.flags.writeable = False
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "W", W)

    @property
    def rank(self) -> int:
        return self.H.shape[0]

    @property
    def n_strata(self) -> int:
        return len(self.v)

    def check_compatible(self, dataset: StrataDataset) -> None:
        if self.n_strata != dataset.n_strata:
            raise ShapeError(
                f"model has {self.n_strata} strata, dataset has {dataset.n_strata}"
            )
        if self.H.shape[1] != dataset.n_cols:
            raise ShapeError(
                f"model has {self.H.shape[1]} columns, dataset has {dataset.n_cols}"
            )
        for i, (Wi, m) in enumerate(zip(self.W, dataset.rows)):
            if Wi.shape[0] != m:
                raise ShapeError(f"W[{i}] has {Wi.shape[0]} rows, A[{i}] has {m}")


@dataclass(frozen=True)
class FitConfig:
    """Fit settings. ``inner_v_updates=2`` and ``eps=1e-9`` are the usual defaults."""

    rank: int
    outer_iters: int = 100
    inner_v_updates: int = 2
    eps: float = 1e-9
    seed: int = 0
    log_every: int = 1

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.outer_iters < 0:
            raise ValueError(f"outer_iters must be >= 0, got {self.outer_iters}")
        if self.inner_v_updates < 1:
            raise ValueError(f"inner_v_updates must be >= 1, got {self.inner_v_updates}")
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")


@dataclass
class LossTrace:
    """Loss (``sqrt`` of the objective) and normalized loss per logged iteration.

    Iteration 0 is the initial model; iteration ``k`` is the state after ``k``
    full outer iterations. ``strata_means`` holds the mean of every ``v[i]`` at
    the same points.
    """

    iterations: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    normalized_loss: list = field(default_factory=list)
    strata_means: list = field(default_factory=list)

    def record(self, iteration: int, model: Model, dataset: StrataDataset) -> None:
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError(
                f"iteration {iteration} is not after {self.iterations[-1]}"
            )
        obj = objective(model, dataset)
        self.iterations.append(int(iteration))
        self.loss.append(float(np.sqrt(obj)))
        self.normalized_loss.append(float(np.sqrt(obj / dataset.total_squared_norm)))
        self.strata_means.append(strata_means(model))

    def __len__(self) -> int:
        return len(self.iterations)

    @property
    def objective(self) -> Array:
        return np.square(np.asarray(self.loss))


def init_model(dataset: StrataDataset, config: FitConfig) -> Model:
    """Random initial model.

    ``H`` and every ``W[i]`` are i.i.d. uniform on ``[0, 1/sqrt(r)]``, every
    ``v[i]`` i.i.d. uniform on ``[0, 1]``. A single generator seeded with
    ``config.seed`` is consumed in the order ``H, W[0..s-1], v[0..s-1]``,
    each filled row-major.
    """
    rng = np.random.default_rng(config.seed)
    r, n = config.rank, dataset.n_cols
    scale = 1.0 / np.sqrt(r)
    H = rng.uniform(0.0, scale, size=(r, n))
    W = [rng.uniform(0.0, scale, size=(m, r)) for m in dataset.rows]
    v = [rng.uniform(0.0, 1.0, size=n) for _ in range(dataset.n_strata)]
    return Model(v=tuple(v), W=tuple(W), H=H)


def update_v(model: Model, dataset: StrataDataset, eps: float = 1e-9, passes: int = 1) -> Model:
    """Shift update ``v <- v * (A^T 1) / (m v + H^T W^T 1)`` for every stratum.

    ``passes`` repeats the rule; ``H^T W^T 1`` does not depend on ``v`` so it
    is computed once.
    """
    model.check_compatible(dataset)
    new_v = []
    for A_sum, m, vi, Wi in zip(dataset.col_sums, dataset.rows, model.v, model.W):
        topic_part = model.H.T @ Wi.sum(axis=0)
        for _ in range(passes):
            vi = elementwise_mul_div(vi, A_sum, m * vi + topic_part, eps)
        new_v.append(vi)
    return replace(model, v=tuple(new_v))


def update_w(model: Model, dataset: StrataDataset, eps: float = 1e-9) -> Model:
    """Coefficient update ``W <- W * (A H^T) / ((W H + 1 v^T) H^T)`` per stratum."""
    model.check_compatible(dataset)
    H = model.H
    HHt = H @ H.T
    new_W = []
    for A, vi, Wi in zip(dataset.strata, model.v, model.W):
        num = matmul(A, H.T)
        # (W H + 1 v^T) H^T expanded so W H is never formed
        den = Wi @ HHt + (H @ vi)[None, :]
        new_W.append(elementwise_mul_div(Wi, num, den, eps))
    return replace(model, W=tuple(new_W))


def update_h(model: Model, dataset: StrataDataset, eps: float = 1e-9) -> Model:
    """Topics update ``H <- H * sum_i W^T A / sum_i W^T (W H + 1 v^T)``.

    Numerator and denominator are accumulated over strata in index order.
    """
    model.check_compatible(dataset)
    H = model.H
    num = np.zeros_like(H)
    den = np.zeros_like(H)
    for A, vi, Wi in zip(dataset.strata, model.v, model.W):
        num += matmul(Wi.T, A)
        den += (Wi.T @ Wi) @ H + np.outer(Wi.sum(axis=0), vi)
    return replace(model, H=elementwise_mul_div(H, num, den, eps))


def residual(model: Model, A: Matrix, i: int) -> Array:
    """Dense ``A - 1 v[i]^T - W[i] H`` (may be negative)."""
    recon = model.W[i] @ model.H + model.v[i][None, :]
    if is_sparse(A):
        rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
        recon[rows, A.indices] -= A.data
        return -recon
    return A - recon


def objective(model: Model, dataset: StrataDataset) -> float:
    """``sum_i ||A[i] - 1 v[i]^T - W[i] H||_F^2``."""
    model.check_compatible(dataset)
    total = 0.0
    for i, A in enumerate(dataset.strata):
        R = residual(model, A, i)
        total += float(np.dot(R.ravel(), R.ravel()))
    return total


def loss(model: Model, dataset: StrataDataset) -> float:
    return float(np.sqrt(objective(model, dataset)))


def normalized_loss(model: Model, dataset: StrataDataset) -> float:
    """``sqrt(objective / sum_i ||A[i]||_F^2)``; undefined for an all-zero dataset."""
    scale = dataset.total_squared_norm
    if scale <= 0:
        raise ValueError("normalized loss is undefined for an all-zero dataset")
    return float(np.sqrt(objective(model, dataset) / scale))


def strata_means(model: Model) -> list:
    return [float(np.mean(vi)) for vi in model.v]


def fit_step(model: Model, dataset: StrataDataset, config: FitConfig) -> Model:
    """One outer iteration: ``M`` shift updates, then ``W``, then ``H``."""
    model = update_v(model, dataset, config.eps, passes=config.inner_v_updates)
    model = update_w(model, dataset, config.eps)
    return update_h(model, dataset, config.eps)


def fit(
    dataset: StrataDataset,
    config: FitConfig,
    init: Optional[Model] = None,
) -> tuple:
    """Run ``config.outer_iters`` outer iterations from ``init`` (or a random start).

    Returns
    -------
    model : Model
        Final parameters.
    trace : LossTrace
        Iteration 0, every ``log_every``-th iteration, and always the last one.
    """
    if dataset.total_squared_norm <= 0:
        raise ValueError("cannot fit an all-zero dataset")
    model = init_model(dataset, config) if init is None else init
    model.check_compatible(dataset)
    trace = LossTrace()
    trace.record(0, model, dataset)
    N = config.outer_iters
    for k in range(1, N + 1):
        model = fit_step(model, dataset, config)
        if k % config.log_every == 0 or k == N:
            trace.record(k, model, dataset)
            if logger.isEnabledFor(logging.DEBUG):
                logger.debug("iter %d loss %.6g normalized %.6g",
                             k, trace.loss[-1], trace.normalized_loss[-1])
    return model, trace

