"""Read-only summaries of fitted shift vectors."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .engine import Model


class ZeroShiftError(ValueError):
    """A shift vector sums to zero and cannot be normalized."""

    def __init__(self, stratum: int):
        super().__init__(f"v[{stratum}] sums to zero and cannot be normalized")
        self.stratum = stratum


def normalize_shift(v, stratum: int = 0):
    total = np.sum(v)
    if not total > 0:
        raise ZeroShiftError(stratum)
    return np.asarray(v, dtype=np.float64) / total


def normalize_v(model: Model) -> list:
    """Scale every ``v[i]`` to sum to one, for side-by-side comparison of strata."""
    return [normalize_shift(vi, i) for i, vi in enumerate(model.v)]


def topk_features(
    model: Model,
    stratum: int,
    k: int,
    vocab: Optional[Sequence[str]] = None,
) -> list:
    """The ``k`` largest entries of ``v[stratum]`` as ``(index or label, weight)``.

    Sorted by weight, descending; ties go to the smaller index.
    """
    if not 0 <= stratum < model.n_strata:
        raise IndexError(f"stratum {stratum} out of range for {model.n_strata} strata")
    v = model.v[stratum]
    if not 1 <= k <= v.size:
        raise ValueError(f"k must be in [1, {v.size}], got {k}")
    if vocab is not None and len(vocab) != v.size:
        raise ValueError(f"vocabulary has {len(vocab)} entries for {v.size} columns")
    # lexsort: last key is primary
    order = np.lexsort((np.arange(v.size), -v))[:k]
    return [
        (vocab[j] if vocab is not None else int(j), float(v[j])) for j in order
    ]


def sparsity(v, threshold: float = 0.0) -> float:
    """Fraction of entries strictly above ``threshold``."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        return 0.0
    return float(np.count_nonzero(v > threshold) / v.size)
