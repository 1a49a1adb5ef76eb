"""Stratified train/test splitting and balanced undersampling.

Balanced subsets reuse the full minority class in every subset and carve the
majority class into pairwise-disjoint slices of the same size, so averaging
over subsets sees every majority case at most once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import CaseRecord
from .errors import InsufficientCasesError, InsufficientMajorityError
from .imputation import TrainingPool


@dataclass(frozen=True)
class SplitResult:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class BalancedSubset:
    subset_index: int
    case_ids: tuple[str, ...]
    minority_label: bool


def stratified_split(
    cases: Sequence[CaseRecord], test_fraction: float, seed: int
) -> SplitResult:
    """Split cases into train/test, stratified on the observed outcome.

    Each outcome stratum contributes round(test_fraction * stratum size)
    cases to the test set. Case ids are sorted before shuffling, so the
    result depends only on the case set and the seed, not on input order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InsufficientCasesError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    by_label: dict[bool, list[str]] = {False: [], True: []}
    for case in cases:
        by_label[case.fta_observed].append(case.case_id)
    for label, ids in by_label.items():
        if len(ids) < 2:
            raise InsufficientCasesError(
                f"need at least 2 cases with fta_observed={label}, have {len(ids)}"
            )
    rng = np.random.default_rng(seed)
    train: list[str] = []
    test: list[str] = []
    for label in (False, True):
        ids = sorted(by_label[label])
        order = rng.permutation(len(ids))
        n_test = int(len(ids) * test_fraction + 0.5)
        shuffled = [ids[i] for i in order]
        test.extend(shuffled[:n_test])
        train.extend(shuffled[n_test:])
    return SplitResult(train_ids=tuple(train), test_ids=tuple(test), seed=seed)


def balanced_subsets(
    pool: TrainingPool, n_subsets: int, seed: int
) -> list[BalancedSubset]:
    """Build ``n_subsets`` exactly 50/50 subsets from an imputed pool.

    Every subset carries the entire minority class; the majority class is
    shuffled once under ``seed`` and cut into contiguous, disjoint slices of
    minority size. Class counts are taken from the pool's post-imputation
    labels, so the minority class can differ between imputation methods.
    """
    labels = pool.labels
    ids = np.asarray(pool.matrix.case_ids, dtype=object)
    n_true = int(labels.sum())
    n_false = labels.size - n_true
    minority_label = n_true <= n_false
    minority_ids = ids[labels] if minority_label else ids[~labels]
    majority_ids = ids[~labels] if minority_label else ids[labels]

    m = len(minority_ids)
    required = n_subsets * m
    if len(majority_ids) < required:
        raise InsufficientMajorityError(required=required, available=len(majority_ids))
    if m == 0:
        raise InsufficientMajorityError(required=n_subsets, available=0)

    rng = np.random.default_rng(seed)
    majority_sorted = np.sort(majority_ids.astype(str))
    shuffled = majority_sorted[rng.permutation(len(majority_sorted))]
    minority_tuple = tuple(sorted(minority_ids.astype(str)))

    subsets = []
    for i in range(n_subsets):
        slice_ids = tuple(shuffled[i * m : (i + 1) * m])
        subsets.append(
            BalancedSubset(
                subset_index=i,
                case_ids=minority_tuple + slice_ids,
                minority_label=bool(minority_label),
            )
        )
    return subsets
