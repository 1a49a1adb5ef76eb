"""Result statistics: stratified MCC, distribution distances, importances.

The headline table reports Matthews correlation (scaled to [-100, 100])
separately on determinate and indeterminate test cases, averaged over the
balanced training subsets. Distribution distances compare prediction sets
across imputation methods and across model families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .domain import ImputationMethod
from .errors import (
    EmptySampleError,
    IncompleteGridError,
    LengthMismatchError,
    SchemaMismatchError,
)
from .learners import ModelKind

DEFAULT_THRESHOLD = 0.5
DEFAULT_TOP_K = 15


def mcc_scaled(
    labels: np.ndarray | Sequence[bool],
    predictions: np.ndarray | Sequence[float],
    threshold: float = DEFAULT_THRESHOLD,
) -> float:
    """Matthews correlation of thresholded predictions, scaled by 100.

    Predictions at or above the threshold count as positive. Returns 0 when
    any confusion-matrix marginal is zero (the usual degenerate convention).
    """
    y = np.asarray(labels, dtype=bool)
    p = np.asarray(predictions, dtype=np.float64)
    if y.shape != p.shape:
        raise LengthMismatchError(
            f"{y.shape[0]} labels vs {p.shape[0]} predictions"
        )
    if y.size == 0:
        raise LengthMismatchError("need at least one case")
    pred = p >= threshold
    tp = float(np.count_nonzero(pred & y))
    tn = float(np.count_nonzero(~pred & ~y))
    fp = float(np.count_nonzero(pred & ~y))
    fn = float(np.count_nonzero(~pred & y))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0
    return 100.0 * (tp * tn - fp * fn) / np.sqrt(denom)


def wasserstein_1d(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """1-Wasserstein distance between two empirical distributions.

    Integrates |ECDF_a - ECDF_b| over the pooled sample points; for
    equal-size samples this equals the mean absolute difference of the
    sorted samples.
    """
    xa = np.sort(np.asarray(a, dtype=np.float64))
    xb = np.sort(np.asarray(b, dtype=np.float64))
    if xa.size == 0 or xb.size == 0:
        raise EmptySampleError("both samples must be non-empty")
    pooled = np.sort(np.concatenate([xa, xb]))
    deltas = np.diff(pooled)
    if deltas.size == 0:
        return 0.0
    cdf_a = np.searchsorted(xa, pooled[:-1], side="right") / xa.size
    cdf_b = np.searchsorted(xb, pooled[:-1], side="right") / xb.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def ks_statistic(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup |ECDF_a - ECDF_b|."""
    xa = np.sort(np.asarray(a, dtype=np.float64))
    xb = np.sort(np.asarray(b, dtype=np.float64))
    if xa.size == 0 or xb.size == 0:
        raise EmptySampleError("both samples must be non-empty")
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / xa.size
    cdf_b = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True)
class PredictionSet:
    """Test-set probabilities from one (method, model, subset) cell."""

    method: ImputationMethod
    model_kind: ModelKind
    subset_index: int
    case_ids: tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        probs = np.ascontiguousarray(self.probabilities, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        if probs.shape != (len(self.case_ids),):
            raise LengthMismatchError(
                "probabilities must align with case ids"
            )


@dataclass(frozen=True)
class StratifiedCell:
    determinate_mean: float
    determinate_std: float
    indeterminate_mean: float
    indeterminate_std: float


@dataclass(frozen=True)
class MccTable:
    cells: Mapping[tuple[ImputationMethod, ModelKind], StratifiedCell]
    n_subsets: int
    threshold: float

    def rows(self) -> list[dict]:
        out = []
        for (method, model), cell in sorted(
            self.cells.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            out.append(
                {
                    "method": method.value,
                    "model": model.value,
                    "determinate_mean": cell.determinate_mean,
                    "determinate_std": cell.determinate_std,
                    "indeterminate_mean": cell.indeterminate_mean,
                    "indeterminate_std": cell.indeterminate_std,
                }
            )
        return out


def _grid_cells(
    prediction_sets: Sequence[PredictionSet],
) -> dict[tuple[ImputationMethod, ModelKind], list[PredictionSet]]:
    cells: dict[tuple[ImputationMethod, ModelKind], list[PredictionSet]] = {}
    for ps in prediction_sets:
        cells.setdefault((ps.method, ps.model_kind), []).append(ps)
    counts = {key: len(v) for key, v in cells.items()}
    if len(set(counts.values())) > 1:
        raise IncompleteGridError(f"uneven subset counts per cell: {counts}")
    for key, sets in cells.items():
        indices = sorted(ps.subset_index for ps in sets)
        if indices != list(range(len(sets))):
            raise IncompleteGridError(
                f"cell {key} has subset indices {indices}"
            )
        sets.sort(key=lambda ps: ps.subset_index)
    return cells


def stratified_mcc_table(
    prediction_sets: Sequence[PredictionSet],
    test_labels: np.ndarray,
    test_determinate: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
) -> MccTable:
    """Mean and sample std of scaled MCC per cell, split by determinacy.

    Every prediction set must cover the test cases in the same order;
    ``test_labels`` and ``test_determinate`` align with that order.
    """
    labels = np.asarray(test_labels, dtype=bool)
    determinate = np.asarray(test_determinate, dtype=bool)
    cells = _grid_cells(prediction_sets)
    n_subsets = len(next(iter(cells.values()))) if cells else 0

    reference_ids = None
    table: dict[tuple[ImputationMethod, ModelKind], StratifiedCell] = {}
    for key, sets in cells.items():
        det_scores = []
        ind_scores = []
        for ps in sets:
            if reference_ids is None:
                reference_ids = ps.case_ids
                if len(reference_ids) != labels.size:
                    raise IncompleteGridError(
                        "prediction sets do not cover the test cases"
                    )
            elif ps.case_ids != reference_ids:
                raise IncompleteGridError(
                    "prediction sets cover different test cases"
                )
            det_scores.append(
                mcc_scaled(labels[determinate], ps.probabilities[determinate], threshold)
            )
            ind_scores.append(
                mcc_scaled(labels[~determinate], ps.probabilities[~determinate], threshold)
            )
        det = np.asarray(det_scores)
        ind = np.asarray(ind_scores)
        table[key] = StratifiedCell(
            determinate_mean=float(det.mean()),
            determinate_std=float(det.std(ddof=1)) if det.size > 1 else 0.0,
            indeterminate_mean=float(ind.mean()),
            indeterminate_std=float(ind.std(ddof=1)) if ind.size > 1 else 0.0,
        )
    return MccTable(cells=table, n_subsets=n_subsets, threshold=threshold)


def aggregate_importance(
    importances: Sequence[Mapping[str, float]],
    top_k: int = DEFAULT_TOP_K,
) -> list[tuple[str, float]]:
    """Mean of normalized gain vectors, ranked descending, truncated to top_k."""
    if not importances:
        raise SchemaMismatchError("no importance vectors to aggregate")
    names = set(importances[0])
    for vec in importances[1:]:
        if set(vec) != names:
            raise SchemaMismatchError("importance vectors name different features")
    means = {
        name: float(np.mean([vec[name] for vec in importances])) for name in names
    }
    ranked = sorted(means.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:top_k]


@dataclass(frozen=True)
class EffectSummary:
    """Mean pairwise prediction distances along the method and model axes."""

    method_axis_mean: float
    model_axis_mean: float
    method_pair_distances: Mapping[tuple[ImputationMethod, ImputationMethod], float]
    model_pair_distances: Mapping[tuple[ModelKind, ModelKind], float]
    per_subset_method_axis_mean: float = field(default=float("nan"))
    per_subset_model_axis_mean: float = field(default=float("nan"))

    def smallest_method_pair(self) -> tuple[ImputationMethod, ImputationMethod]:
        return min(self.method_pair_distances, key=self.method_pair_distances.get)


def method_vs_model_effect(
    prediction_sets: Sequence[PredictionSet],
) -> EffectSummary:
    """Compare how much predictions move across methods versus across models.

    The primary statistics pool each cell's predictions across subsets; the
    per-subset variants average pairwise distances computed subset by subset
    and are reported for sensitivity.
    """
    cells = _grid_cells(prediction_sets)
    methods = sorted({m for m, _ in cells}, key=lambda m: m.value)
    models = sorted({k for _, k in cells}, key=lambda k: k.value)
    expected = {(m, k) for m in methods for k in models}
    if set(cells) != expected:
        raise IncompleteGridError("the method x model grid has missing cells")

    pooled = {
        key: np.concatenate([ps.probabilities for ps in sets])
        for key, sets in cells.items()
    }
    n_subsets = len(next(iter(cells.values())))

    method_pairs: dict[tuple[ImputationMethod, ImputationMethod], list[float]] = {}
    method_pairs_subset: list[float] = []
    for m1, m2 in combinations(methods, 2):
        distances = []
        for model in models:
            distances.append(wasserstein_1d(pooled[(m1, model)], pooled[(m2, model)]))
            for s in range(n_subsets):
                method_pairs_subset.append(
                    wasserstein_1d(
                        cells[(m1, model)][s].probabilities,
                        cells[(m2, model)][s].probabilities,
                    )
                )
        method_pairs[(m1, m2)] = distances

    model_pairs: dict[tuple[ModelKind, ModelKind], list[float]] = {}
    model_pairs_subset: list[float] = []
    for k1, k2 in combinations(models, 2):
        distances = []
        for method in methods:
            distances.append(wasserstein_1d(pooled[(method, k1)], pooled[(method, k2)]))
            for s in range(n_subsets):
                model_pairs_subset.append(
                    wasserstein_1d(
                        cells[(method, k1)][s].probabilities,
                        cells[(method, k2)][s].probabilities,
                    )
                )
        model_pairs[(k1, k2)] = distances

    method_axis = (
        float(np.mean([d for ds in method_pairs.values() for d in ds]))
        if method_pairs
        else float("nan")
    )
    model_axis = (
        float(np.mean([d for ds in model_pairs.values() for d in ds]))
        if model_pairs
        else float("nan")
    )
    return EffectSummary(
        method_axis_mean=method_axis,
        model_axis_mean=model_axis,
        method_pair_distances={
            pair: float(np.mean(ds)) for pair, ds in method_pairs.items()
        },
        model_pair_distances={
            pair: float(np.mean(ds)) for pair, ds in model_pairs.items()
        },
        per_subset_method_axis_mean=(
            float(np.mean(method_pairs_subset)) if method_pairs_subset else float("nan")
        ),
        per_subset_model_axis_mean=(
            float(np.mean(model_pairs_subset)) if model_pairs_subset else float("nan")
        ),
    )


def prediction_histogram(
    probabilities: np.ndarray, n_bins: int = 40
) -> list[tuple[float, float, int]]:
    """Fixed [0, 1] histogram bins for external violin/density plotting."""
    counts, edges = np.histogram(
        np.asarray(probabilities, dtype=np.float64), bins=n_bins, range=(0.0, 1.0)
    )
    return [
        (float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(n_bins)
    ]
