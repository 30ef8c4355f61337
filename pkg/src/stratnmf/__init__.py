"""Stratified non-negative matrix factorization.

Factorizes strata ``A[i] ~ 1 v[i]^T + W[i] H`` with a shared topics matrix
``H`` and per-stratum shifts ``v[i]`` using multiplicative updates.
"""

from .engine import (
    FitConfig,
    LossTrace,
    Model,
    StrataDataset,
    fit,
    init_model,
    loss,
    normalized_loss,
    objective,
    strata_means,
    update_h,
    update_v,
    update_w,
)
from .report import normalize_v, sparsity, topk_features

__version__ = "0.1.0"

__all__ = [
    "FitConfig",
    "LossTrace",
    "Model",
    "StrataDataset",
    "fit",
    "init_model",
    "loss",
    "normalize_v",
    "normalized_loss",
    "objective",
    "sparsity",
    "strata_means",
    "topk_features",
    "update_h",
    "update_v",
    "update_w",
]
