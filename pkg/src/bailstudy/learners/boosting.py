"""Gradient-boosted trees on logistic loss with second-order leaf weights.

Per round, each case contributes a weighted gradient g = w(p - y) and
hessian h = w p (1 - p); leaves take the value -soft_threshold(sum g, l1) /
(sum h + l2) and splits maximize the matching second-order gain. Row and
column subsampling are seeded per tree. Split gains are recorded per feature
for the importance ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ..errors import EmptyPoolError, NonFiniteError, SchemaMismatchError
from .logistic import sigmoid
from .trees import PackedTrees, Tree, grow_boost_tree, predict_single_tree

if TYPE_CHECKING:
    from ..ingest import FeatureMatrix

_PREVALENCE_EPS = 1e-12


@dataclass(frozen=True)
class BoostConfig:
    n_trees: int = 800
    max_depth: int = 4
    learning_rate: float = 0.005
    row_subsample: float = 0.8
    col_subsample: float = 0.9
    l2: float = 5.0
    l1: float = 1.0
    min_child_weight: float = 20.0


@dataclass(frozen=True)
class BoostedModel:
    trees: tuple[Tree, ...]
    base_score: float
    column_names: tuple[str, ...]
    config: BoostConfig
    seed: int
    per_tree_gains: np.ndarray  # (n_trees, n_columns) split-gain ledger
    training_loss: tuple[float, ...] = ()
    _packed: PackedTrees = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_packed", PackedTrees.from_trees(self.trees))
        gains = np.ascontiguousarray(self.per_tree_gains, dtype=np.float64)
        gains.setflags(write=False)
        object.__setattr__(self, "per_tree_gains", gains)

    @property
    def total_gain(self) -> np.ndarray:
        return self.per_tree_gains.sum(axis=0)

    @property
    def has_splits(self) -> bool:
        return bool(self.per_tree_gains.sum() > 0.0)

    def decision_scores(self, matrix: "FeatureMatrix") -> np.ndarray:
        if matrix.column_names != self.column_names:
            raise SchemaMismatchError(
                "prediction matrix columns differ from training columns"
            )
        raw = self._packed.leaf_value_sum(matrix.values)
        return self.base_score + self.config.learning_rate * raw

    def predict_proba(self, matrix: "FeatureMatrix") -> np.ndarray:
        return sigmoid(self.decision_scores(matrix))


def gains_from_trees(trees: tuple[Tree, ...], n_columns: int) -> np.ndarray:
    """Per-tree, per-column accumulated split gains, in node order."""
    gains = np.zeros((len(trees), n_columns), dtype=np.float64)
    for t, tree in enumerate(trees):
        if tree.gain is None:
            continue
        for node in range(tree.n_nodes):
            f = tree.feature[node]
            if f >= 0:
                gains[t, f] += tree.gain[node]
    return gains


def weighted_log_loss(y: np.ndarray, prob: np.ndarray, w: np.ndarray) -> float:
    total = float(w.sum())
    per_case = -(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob))
    return float(np.dot(w, per_case)) / total


def train_gbdt(pool, config: BoostConfig | None = None, seed: int = 0) -> BoostedModel:
    """Boost on logistic loss. Deterministic given (pool, config, seed).

    ``training_loss`` records the weighted mean log-loss on the full pool
    after each round (index 0 is the base score alone).
    """
    config = config or BoostConfig()
    X = pool.matrix.values
    y = pool.labels.astype(np.float64)
    w = pool.weights
    n, p = X.shape
    if n == 0:
        raise EmptyPoolError("cannot boost on an empty pool")

    prevalence = float(np.dot(w, y) / w.sum())
    prevalence = min(max(prevalence, _PREVALENCE_EPS), 1.0 - _PREVALENCE_EPS)
    base_score = math.log(prevalence / (1.0 - prevalence))

    rng = np.random.default_rng(seed)
    n_rows = max(1, int(round(config.row_subsample * n)))
    n_cols = max(1, int(round(config.col_subsample * p)))

    margins = np.full(n, base_score, dtype=np.float64)
    losses = [weighted_log_loss(y, sigmoid(margins), w)]
    trees: list[Tree] = []
    for _ in range(config.n_trees):
        prob = sigmoid(margins)
        g = w * (prob - y)
        h = w * prob * (1.0 - prob)
        rows = np.sort(rng.permutation(n)[:n_rows]).astype(np.int64)
        cols = np.sort(rng.permutation(p)[:n_cols]).astype(np.int64)
        tree = grow_boost_tree(
            X,
            g,
            h,
            rows,
            cols,
            config.max_depth,
            config.min_child_weight,
            config.l1,
            config.l2,
        )
        trees.append(tree)
        margins += config.learning_rate * predict_single_tree(tree, X)
        if not np.all(np.isfinite(margins)):
            raise NonFiniteError("boosting margins overflowed")
        losses.append(weighted_log_loss(y, sigmoid(margins), w))

    return BoostedModel(
        trees=tuple(trees),
        base_score=base_score,
        column_names=pool.matrix.column_names,
        config=config,
        seed=seed,
        per_tree_gains=gains_from_trees(tuple(trees), p),
        training_loss=tuple(losses),
    )


def gain_importance(model: BoostedModel) -> np.ndarray:
    """Total split gain per column, normalized to sum to 1.

    A model that never split (``has_splits`` false) yields all zeros.
    """
    total = model.total_gain
    denom = total.sum()
    if denom <= 0.0:
        return np.zeros_like(total)
    return total / denom
