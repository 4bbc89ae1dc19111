"""Learned rank-correlation surrogate losses (C++ core)."""

from reloss._core import (
    Error,
    LossNet,
    UsageError,
    accuracy,
    corr_eval,
    gradcheck,
    hard_rank,
    kendall_tau,
    relaxed_permutation,
    soft_rank,
    spearman,
    spearman_soft,
)

__all__ = [
    "Error",
    "LossNet",
    "UsageError",
    "accuracy",
    "corr_eval",
    "gradcheck",
    "hard_rank",
    "kendall_tau",
    "relaxed_permutation",
    "soft_rank",
    "spearman",
    "spearman_soft",
]
