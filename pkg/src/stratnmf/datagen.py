"""Synthetic stratified data with planted shifts.

Stratum ``i`` is ``U[i] V + 1 v_true[i]^T`` where ``U[i]`` (``m x k``) and
``V`` (``k x n``) have i.i.d. uniform ``[0, 1]`` entries and ``v_true[i]``
is uniform on ``[low_i, high_i]``. ``V`` is shared by all strata, so every
stratum is drawn from one common distribution plus its own shift; with
``shared_topics=False`` each stratum gets its own ``V[i]`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import StrataDataset


@dataclass(frozen=True)
class SyntheticSpec:
    n_strata: int
    rows: int
    cols: int
    inner_rank: int
    shift_low: tuple
    shift_high: tuple
    seed: int = 0
    shared_topics: bool = True

    def __post_init__(self):
        if self.n_strata < 1 or self.rows < 1 or self.cols < 1:
            raise ValueError(
                f"need n_strata, rows, cols >= 1; got {self.n_strata}, {self.rows}, {self.cols}"
            )
        if self.inner_rank < 0:
            raise ValueError(f"inner_rank must be >= 0, got {self.inner_rank}")
        low, high = tuple(map(float, self.shift_low)), tuple(map(float, self.shift_high))
        if len(low) != self.n_strata or len(high) != self.n_strata:
            raise ValueError(
                f"need {self.n_strata} shift bounds, got {len(low)} low and {len(high)} high"
            )
        for i, (lo, hi) in enumerate(zip(low, high)):
            if not 0 <= lo <= hi:
                raise ValueError(f"stratum {i}: need 0 <= low <= high, got [{lo}, {hi}]")
        object.__setattr__(self, "shift_low", low)
        object.__setattr__(self, "shift_high", high)


def ladder_shifts(n_strata: int) -> tuple:
    """Bounds ``[i - 1, i]`` for strata ``i = 1..n_strata``."""
    return tuple(float(i) for i in range(n_strata)), tuple(
        float(i + 1) for i in range(n_strata)
    )


def paper_spec(seed: int = 0) -> SyntheticSpec:
    """Four 100 x 100 strata of inner rank 5 with shifts on ``[i - 1, i]``."""
    low, high = ladder_shifts(4)
    return SyntheticSpec(
        n_strata=4, rows=100, cols=100, inner_rank=5,
        shift_low=low, shift_high=high, seed=seed,
    )


@dataclass(frozen=True)
class SyntheticDataset:
    dataset: StrataDataset
    v_true: tuple

    @property
    def v_true_means(self) -> list:
        return [float(np.mean(v)) for v in self.v_true]


def generate(spec: SyntheticSpec, names: Sequence[str] = ()) -> SyntheticDataset:
    """Draw a dataset.

    Generator order: the shared ``V`` (if any), then per stratum ``U``,
    ``V`` (if not shared) and ``v_true``.
    """
    rng = np.random.default_rng(spec.seed)
    m, n, k = spec.rows, spec.cols, spec.inner_rank
    if spec.shared_topics:
        V = rng.uniform(0.0, 1.0, size=(k, n))
    strata, shifts = [], []
    for lo, hi in zip(spec.shift_low, spec.shift_high):
        U = rng.uniform(0.0, 1.0, size=(m, k))
        if not spec.shared_topics:
            V = rng.uniform(0.0, 1.0, size=(k, n))
        v_true = rng.uniform(lo, hi, size=n)
        strata.append(U @ V + v_true[None, :])
        shifts.append(v_true)
    return SyntheticDataset(
        dataset=StrataDataset(tuple(strata), names=tuple(names)),
        v_true=tuple(shifts),
    )
