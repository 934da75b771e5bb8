"""Data preparation: kNN imputation, group balancing and Gaussian augmentation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InputError, PreparedMatrix, QuestionnaireMatrix


class ImputationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PrepConfig:
    k_impute: int = 5
    augment_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.k_impute < 1:
            raise ValueError("k_impute must be >= 1")
        if self.augment_sd < 0:
            raise ValueError("augment_sd must be nonnegative")


def knn_impute(matrix: QuestionnaireMatrix, k: int = 5) -> QuestionnaireMatrix:
    """Fill each missing cell with the mean of its k nearest donor rows.

    For a row with observed items O and a missing item m, donors are the rows
    observed on every item of O and on m. Distance is Euclidean over O, ties
    go to the lower row index. Donor values always come from the original
    (un-imputed) matrix, and imputed values are not rounded.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = matrix.values
    miss = np.isnan(X)
    if not miss.any():
        return matrix
    out = X.copy()
    for i in np.flatnonzero(miss.any(axis=1)):
        obs = ~miss[i]
        if not obs.any():
            raise InputError(f"row {i} has no observed items and cannot be imputed")
        complete_on_obs = ~miss[:, obs].any(axis=1)
        dist = np.sqrt(np.sum((X[:, obs] - X[i, obs]) ** 2, axis=1))
        for m in np.flatnonzero(miss[i]):
            donors = np.flatnonzero(complete_on_obs & ~miss[:, m])
            if donors.size == 0:
                raise InputError(f"row {i}, item {m + 1}: no donor rows for imputation")
            if donors.size < k:
                warnings.warn(
                    f"row {i}, item {m + 1}: only {donors.size} donors for k={k}",
                    ImputationWarning,
                )
            nearest = donors[np.argsort(dist[donors], kind="stable")[:k]]
            out[i, m] = X[nearest, m].mean()
    return matrix.with_values(out)


def balance_groups(matrix: QuestionnaireMatrix, seed=0) -> PreparedMatrix:
    """Oversample smaller groups up to the largest group size.

    All original rows are kept in their original order; duplicates, drawn
    uniformly with replacement from each group's own rows, are appended group
    by group.
    """
    if not matrix.is_complete:
        raise InputError("balance_groups needs a complete matrix; impute first")
    rng = np.random.default_rng(seed)
    groups = matrix.groups
    rows = {g: matrix.group_rows(g) for g in groups}
    target = max(len(r) for r in rows.values())
    extra = []
    for g in groups:
        short = target - len(rows[g])
        if short > 0:
            extra.append(rng.choice(rows[g], size=short, replace=True))
    extra = np.concatenate(extra) if extra else np.empty(0, dtype=np.int64)
    source = np.concatenate([np.arange(matrix.n_rows), extra]).astype(np.int64)
    labels = np.asarray(matrix.group_labels)[source]
    dup = np.arange(source.size) >= matrix.n_rows
    return PreparedMatrix(matrix.values[source], tuple(labels), dup, source)


def augment(prepared: PreparedMatrix, sd: float, seed=0) -> PreparedMatrix:
    """Add i.i.d. N(0, sd^2) noise to every cell, without rounding or clamping."""
    if sd < 0:
        raise ValueError("sd must be nonnegative")
    rng = np.random.default_rng(seed)
    noisy = prepared.values + sd * rng.standard_normal(prepared.values.shape)
    return PreparedMatrix(noisy, prepared.group_labels, prepared.duplicate, prepared.source_row)


def prepare(
    matrix: QuestionnaireMatrix, config: Optional[PrepConfig] = None
) -> tuple[QuestionnaireMatrix, PreparedMatrix]:
    """Impute, balance, augment. Returns the imputed originals and the clustering input."""
    config = config or PrepConfig()
    balance_seed, augment_seed = np.random.SeedSequence(config.seed).spawn(2)
    imputed = knn_impute(matrix, config.k_impute)
    balanced = balance_groups(imputed, balance_seed)
    return imputed, augment(balanced, config.augment_sd, augment_seed)
