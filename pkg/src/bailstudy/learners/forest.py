"""Random forest of weighted Gini trees with soft-vote aggregation.

Each tree trains on a bootstrap resample; case weights flow into the split
statistics and leaf estimates, so reweighting a case and duplicating it lead
to the same splits when the bootstrap is disabled. Leaves store the weighted
positive fraction and the forest prediction is the mean over trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ..errors import EmptyPoolError, SchemaMismatchError
from .trees import PackedTrees, Tree, grow_gini_tree

if TYPE_CHECKING:
    from ..ingest import FeatureMatrix


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    max_depth: int = 8
    min_samples_leaf: int = 50
    features_per_split: int | None = None  # None means floor(sqrt(p))
    bootstrap: bool = True

    def resolved_candidates(self, n_columns: int) -> int:
        if self.features_per_split is not None:
            return max(1, min(self.features_per_split, n_columns))
        return max(1, int(math.floor(math.sqrt(n_columns))))


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    column_names: tuple[str, ...]
    config: ForestConfig
    seed: int
    _packed: PackedTrees = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_packed", PackedTrees.from_trees(self.trees))

    def predict_proba(self, matrix: "FeatureMatrix") -> np.ndarray:
        """Mean of per-tree leaf fractions; always inside [0, 1]."""
        if matrix.column_names != self.column_names:
            raise SchemaMismatchError(
                "prediction matrix columns differ from training columns"
            )
        return self._packed.leaf_value_sum(matrix.values) / len(self.trees)


def train_random_forest(pool, config: ForestConfig | None = None, seed: int = 0) -> ForestModel:
    """Fit a forest on an imputed pool. Deterministic given (pool, config, seed)."""
    config = config or ForestConfig()
    X = pool.matrix.values
    y = pool.labels.astype(np.float64)
    w = pool.weights
    n, p = X.shape
    if n == 0:
        raise EmptyPoolError("cannot train a forest on an empty pool")

    n_candidates = config.resolved_candidates(p)
    master = np.random.default_rng(seed)
    tree_seeds = master.integers(0, 2**31 - 1, size=config.n_trees, dtype=np.int64)

    trees = []
    for i in range(config.n_trees):
        rng = np.random.default_rng(int(tree_seeds[i]))
        if config.bootstrap:
            rows = np.sort(rng.integers(0, n, size=n, dtype=np.int64))
        else:
            rows = np.arange(n, dtype=np.int64)
        trees.append(
            grow_gini_tree(
                X,
                y,
                w,
                rows,
                config.max_depth,
                config.min_samples_leaf,
                n_candidates,
                int(tree_seeds[i]) % 2**32,
            )
        )
    return ForestModel(
        trees=tuple(trees),
        column_names=pool.matrix.column_names,
        config=config,
        seed=seed,
    )
