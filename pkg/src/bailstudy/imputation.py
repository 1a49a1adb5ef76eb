"""The five label-imputation strategies for censored training pools.

Each strategy turns a raw pool (observed labels, some of them censored by
detention) into a weighted, fully-labeled pool. Determinate labels are never
modified; the strategies differ only in how they treat indeterminate cases:
keep them (corr), flip them to failure (daf), drop them (obs), drop and
reweight the survivors (obs_ip), or relabel them from their nearest
determinate neighbors (nn).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .domain import CaseRecord, ImputationMethod
from .errors import (
    EmptyPoolError,
    InsufficientNeighborsError,
    InvalidConfigError,
    SingleClassError,
)
from .ingest import FeatureMatrix
from .learners.logistic import LinearModel, LogisticConfig, fit_logistic

#: Propensity estimates: same contract as the FTA classifier, reused for
#: P(determinate | features).
PropensityModel = LinearModel

DEFAULT_NEIGHBOR_COUNT = 52
DEFAULT_PROPENSITY_CLIP = 0.01


@dataclass(frozen=True)
class TrainingPool:
    """Encoded cases with training labels, weights, and determinacy flags."""

    matrix: FeatureMatrix
    labels: np.ndarray  # bool, True = failure to appear
    weights: np.ndarray  # strictly positive float64
    determinate: np.ndarray  # bool, per-case determinacy
    provenance: ImputationMethod | None = None

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=bool)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        determinate = np.ascontiguousarray(self.determinate, dtype=bool)
        n = self.matrix.n_cases
        if labels.shape != (n,) or weights.shape != (n,) or determinate.shape != (n,):
            raise InvalidConfigError("pool arrays must align with the matrix rows")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise InvalidConfigError("pool weights must be strictly positive and finite")
        for name, arr in (("labels", labels), ("weights", weights),
                          ("determinate", determinate)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_cases(self) -> int:
        return self.matrix.n_cases

    @property
    def case_ids(self) -> tuple[str, ...]:
        return self.matrix.case_ids

    def take(self, indices: np.ndarray) -> "TrainingPool":
        idx = np.asarray(indices, dtype=np.int64)
        return TrainingPool(
            matrix=self.matrix.take(idx),
            labels=self.labels[idx].copy(),
            weights=self.weights[idx].copy(),
            determinate=self.determinate[idx].copy(),
            provenance=self.provenance,
        )

    def subset_by_ids(self, case_ids: Sequence[str]) -> "TrainingPool":
        position = {cid: i for i, cid in enumerate(self.case_ids)}
        idx = np.asarray([position[c] for c in case_ids], dtype=np.int64)
        return self.take(idx)


def build_raw_pool(cases: Sequence[CaseRecord], matrix: FeatureMatrix) -> TrainingPool:
    """Pool with observed labels and unit weights, before any imputation."""
    if tuple(c.case_id for c in cases) != matrix.case_ids:
        raise InvalidConfigError("cases and matrix rows are not aligned")
    return TrainingPool(
        matrix=matrix,
        labels=np.array([c.fta_observed for c in cases], dtype=bool),
        weights=np.ones(len(cases), dtype=np.float64),
        determinate=np.array([c.is_determinate for c in cases], dtype=bool),
        provenance=None,
    )


def impute_corr(pool: TrainingPool) -> TrainingPool:
    """Keep every case with its observed label unchanged."""
    return replace(pool, provenance=ImputationMethod.CORR)


def impute_daf(pool: TrainingPool) -> TrainingPool:
    """Relabel every indeterminate case as a failure to appear."""
    labels = pool.labels | ~pool.determinate
    return TrainingPool(
        matrix=pool.matrix,
        labels=labels,
        weights=pool.weights.copy(),
        determinate=pool.determinate.copy(),
        provenance=ImputationMethod.DAF,
    )


def impute_obs(pool: TrainingPool) -> TrainingPool:
    """Keep only determinate cases, with unit weights."""
    idx = np.flatnonzero(pool.determinate)
    if idx.size == 0:
        raise EmptyPoolError("no determinate cases to train on")
    kept = pool.take(idx)
    return TrainingPool(
        matrix=kept.matrix,
        labels=kept.labels.copy(),
        weights=np.ones(idx.size, dtype=np.float64),
        determinate=kept.determinate.copy(),
        provenance=ImputationMethod.OBS,
    )


def fit_propensity(
    pool: TrainingPool, config: LogisticConfig | None = None
) -> PropensityModel:
    """Logistic model of P(determinate | features), fit on the raw pool.

    Uses the same solver as the FTA logistic learner.
    """
    determinate = pool.determinate
    if determinate.all() or not determinate.any():
        raise SingleClassError(
            "propensity fitting needs both determinate and indeterminate cases"
        )
    return fit_logistic(
        pool.matrix.values,
        determinate.astype(np.float64),
        pool.weights,
        pool.matrix.column_names,
        config,
    )


def impute_obs_ip(
    pool: TrainingPool,
    propensity: PropensityModel,
    clip: float = DEFAULT_PROPENSITY_CLIP,
) -> TrainingPool:
    """Keep determinate cases, weighted by inverse observation propensity.

    ``weight = 1 / max(p, clip)`` where ``p`` is the fitted probability of
    being determinate. ``clip=0`` disables the floor (probabilities are
    already bounded away from zero by the model).
    """
    if clip < 0.0 or clip >= 1.0:
        raise InvalidConfigError(f"clip must be in [0, 1), got {clip}")
    idx = np.flatnonzero(pool.determinate)
    if idx.size == 0:
        raise EmptyPoolError("no determinate cases to train on")
    kept = pool.take(idx)
    p = propensity.predict_proba(kept.matrix)
    weights = 1.0 / np.maximum(p, clip)
    return TrainingPool(
        matrix=kept.matrix,
        labels=kept.labels.copy(),
        weights=weights,
        determinate=kept.determinate.copy(),
        provenance=ImputationMethod.OBS_IP,
    )


def standardization_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and scale; zero-variance columns get scale 1."""
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    scale[scale == 0.0] = 1.0
    return mean, scale


def impute_nn(
    pool: TrainingPool,
    k: int = DEFAULT_NEIGHBOR_COUNT,
    tie_break_fta: bool = False,
) -> TrainingPool:
    """Relabel indeterminate cases by a k-nearest-determinate majority vote.

    Distances are Euclidean over features standardized with determinate-set
    statistics. Neighbors tie-break on the determinate row index; an exact
    vote tie (possible for even k) resolves to ``tie_break_fta``.
    """
    det_idx = np.flatnonzero(pool.determinate)
    ind_idx = np.flatnonzero(~pool.determinate)
    if det_idx.size < k:
        raise InsufficientNeighborsError(
            f"need at least k={k} determinate cases, have {det_idx.size}"
        )
    labels = pool.labels.copy()
    if ind_idx.size:
        mean, scale = standardization_stats(pool.matrix.values[det_idx])
        det_z = (pool.matrix.values[det_idx] - mean) / scale
        ind_z = (pool.matrix.values[ind_idx] - mean) / scale
        det_labels = pool.labels[det_idx].astype(np.int64)
        votes = _neighbor_votes(ind_z, det_z, det_labels, k)
        imputed = np.where(
            votes * 2 == k,
            tie_break_fta,
            votes * 2 > k,
        )
        labels[ind_idx] = imputed
    return TrainingPool(
        matrix=pool.matrix,
        labels=labels,
        weights=np.ones(pool.n_cases, dtype=np.float64),
        determinate=pool.determinate.copy(),
        provenance=ImputationMethod.NN,
    )


def _neighbor_votes(
    queries: np.ndarray,
    reference: np.ndarray,
    reference_labels: np.ndarray,
    k: int,
    chunk_size: int = 64,
) -> np.ndarray:
    """Positive-label counts among each query's k nearest reference rows.

    Distances accumulate column by column in declaration order so that an
    independent re-computation with the same order reproduces them bitwise;
    stable argsort then makes neighbor selection reproducible under ties.
    """
    n_ref, p = reference.shape
    votes = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], chunk_size):
        block = queries[start : start + chunk_size]
        d2 = np.zeros((block.shape[0], n_ref), dtype=np.float64)
        for j in range(p):
            diff = block[:, j][:, None] - reference[:, j][None, :]
            d2 += diff * diff
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes[start : start + block.shape[0]] = reference_labels[order].sum(axis=1)
    return votes


def apply_imputation(
    method: ImputationMethod,
    pool: TrainingPool,
    nn_k: int = DEFAULT_NEIGHBOR_COUNT,
    nn_tie_break_fta: bool = False,
    ip_clip: float = DEFAULT_PROPENSITY_CLIP,
    propensity_config: LogisticConfig | None = None,
) -> TrainingPool:
    """Dispatch a method over the raw pool with its parameters."""
    if method is ImputationMethod.CORR:
        return impute_corr(pool)
    if method is ImputationMethod.DAF:
        return impute_daf(pool)
    if method is ImputationMethod.OBS:
        return impute_obs(pool)
    if method is ImputationMethod.OBS_IP:
        propensity = fit_propensity(pool, propensity_config)
        return impute_obs_ip(pool, propensity, ip_clip)
    return impute_nn(pool, k=nn_k, tie_break_fta=nn_tie_break_fta)
