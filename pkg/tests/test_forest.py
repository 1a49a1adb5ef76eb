import numpy as np
import pytest

from bailstudy.imputation import TrainingPool
from bailstudy.ingest import FeatureMatrix
from bailstudy.learners import (
    ForestConfig,
    load_model,
    save_model,
    train_random_forest,
)


def pool_from(values, labels, weights=None):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    matrix = FeatureMatrix(
        values=values,
        column_names=tuple(f"x{j}" for j in range(values.shape[1])),
        case_ids=tuple(f"c{i:05d}" for i in range(n)),
    )
    return TrainingPool(
        matrix=matrix,
        labels=np.asarray(labels, dtype=bool),
        weights=np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64),
        determinate=np.ones(n, dtype=bool),
    )


def random_pool(n=300, p=5, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, p))
    labels = (values[:, 0] + 0.5 * rng.normal(size=n)) > 0
    return pool_from(values, labels)


def test_pure_pool_predicts_one_everywhere():
    pool = pool_from(np.random.default_rng(0).normal(size=(120, 3)), np.ones(120))
    model = train_random_forest(pool, ForestConfig(n_trees=10, min_samples_leaf=5), seed=1)
    probs = model.predict_proba(pool.matrix)
    assert np.all(probs == 1.0)


def test_trees_respect_depth_and_leaf_size():
    pool = random_pool(n=600, seed=2)
    config = ForestConfig(n_trees=25, max_depth=8, min_samples_leaf=50)
    model = train_random_forest(pool, config, seed=3)
    for tree in model.trees:
        assert tree.max_depth() <= 8
    # the leaf-size floor counts bootstrap rows; with the bootstrap disabled
    # the training rows are the pool itself, so leaf counts are checkable
    config = ForestConfig(n_trees=5, max_depth=8, min_samples_leaf=50, bootstrap=False)
    model = train_random_forest(pool, config, seed=3)
    for tree in model.trees:
        counts = _leaf_row_counts(tree, pool.matrix.values)
        assert min(counts.values()) >= 50


def _leaf_row_counts(tree, X):
    counts = {}
    for row in X:
        node = 0
        while tree.feature[node] >= 0:
            if row[tree.feature[node]] < tree.threshold[node]:
                node = int(tree.left[node])
            else:
                node = int(tree.right[node])
        counts[node] = counts.get(node, 0) + 1
    return counts


def gini_oracle_best_split(X, y, w):
    """Exhaustive weighted-impurity search over all columns and boundaries."""
    n, p = X.shape
    w_tot = w.sum()
    w_pos = w[y].sum()
    parent = _gini(w_pos, w_tot)
    best = (0.0, None, None)
    for f in range(p):
        order = np.argsort(X[:, f], kind="stable")
        wl = 0.0
        wpl = 0.0
        for t in range(n - 1):
            i = order[t]
            wl += w[i]
            wpl += w[i] * y[i]
            v_cur, v_nxt = X[order[t], f], X[order[t + 1], f]
            if v_nxt <= v_cur:
                continue
            gain = (
                parent
                - (wl / w_tot) * _gini(wpl, wl)
                - ((w_tot - wl) / w_tot) * _gini(w_pos - wpl, w_tot - wl)
            )
            if gain > best[0]:
                best = (gain, f, 0.5 * (v_cur + v_nxt))
    return best


def _gini(w_pos, w_tot):
    p = w_pos / w_tot
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def test_single_split_matches_gini_oracle():
    rng = np.random.default_rng(7)
    for seed in range(5):
        X = rng.normal(size=(50, 3))
        flag = rng.random(50) < 0.5
        X[:, 1] = flag  # perfectly separating binary feature
        y = flag.copy()
        w = rng.uniform(0.5, 2.0, 50)
        pool = pool_from(X, y, w)
        config = ForestConfig(
            n_trees=1,
            max_depth=1,
            min_samples_leaf=1,
            features_per_split=3,
            bootstrap=False,
        )
        model = train_random_forest(pool, config, seed=seed)
        tree = model.trees[0]
        _, oracle_f, oracle_thr = gini_oracle_best_split(X, y, w)
        assert tree.feature[0] == oracle_f == 1
        assert tree.threshold[0] == oracle_thr


def test_bit_for_bit_determinism():
    pool = random_pool(n=250, seed=4)
    config = ForestConfig(n_trees=30)
    a = train_random_forest(pool, config, seed=9)
    b = train_random_forest(pool, config, seed=9)
    assert np.array_equal(a.predict_proba(pool.matrix), b.predict_proba(pool.matrix))
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
        assert np.array_equal(ta.value, tb.value)
    c = train_random_forest(pool, config, seed=10)
    assert not np.array_equal(a.predict_proba(pool.matrix), c.predict_proba(pool.matrix))


def test_weight_two_equals_duplication_without_bootstrap():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(60, 3))
    y = X[:, 0] > 0.2
    weights = np.ones(60)
    weights[11] = 2.0
    config = ForestConfig(
        n_trees=3, max_depth=4, min_samples_leaf=2, features_per_split=3, bootstrap=False
    )
    a = train_random_forest(pool_from(X, y, weights), config, seed=5)
    b = train_random_forest(
        pool_from(np.vstack([X, X[11]]), np.concatenate([y, [y[11]]])), config, seed=5
    )
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)


def test_predictions_bounded_and_serialization_round_trip(tmp_path):
    pool = random_pool(n=200, seed=6)
    model = train_random_forest(pool, ForestConfig(n_trees=20), seed=2)
    probs = model.predict_proba(pool.matrix)
    assert np.all(probs >= 0.0)
    assert np.all(probs <= 1.0)
    path = tmp_path / "forest.json"
    save_model(model, path)
    reloaded = load_model(path)
    assert np.array_equal(probs, reloaded.predict_proba(pool.matrix))
