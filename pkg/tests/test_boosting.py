import numpy as np
import pytest

from bailstudy.imputation import TrainingPool
from bailstudy.ingest import FeatureMatrix
from bailstudy.learners import (
    BoostConfig,
    gain_importance,
    load_model,
    save_model,
    train_gbdt,
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


def random_pool(n=400, p=4, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, p))
    labels = (values[:, 0] - 0.5 * values[:, 1] + rng.normal(scale=0.6, size=n)) > 0
    return pool_from(values, labels)


def test_training_loss_is_non_increasing():
    pool = random_pool(n=500, seed=1)
    model = train_gbdt(pool, BoostConfig(n_trees=150), seed=2)
    losses = np.asarray(model.training_loss)
    assert losses.size == 151
    assert np.all(np.diff(losses) <= 1e-12)
    assert losses[-1] < losses[0]


def test_constant_label_pool_degenerates_to_base_rate():
    values = np.random.default_rng(3).normal(size=(200, 3))
    pool = pool_from(values, np.ones(200))
    model = train_gbdt(pool, BoostConfig(n_trees=25), seed=1)
    probs = model.predict_proba(pool.matrix)
    assert np.all(np.abs(probs - 1.0) < 1e-6)
    assert not model.has_splits
    mixed = pool_from(values, np.concatenate([np.ones(140), np.zeros(60)]))
    degenerate = train_gbdt(
        mixed, BoostConfig(n_trees=10, min_child_weight=1e9), seed=1
    )
    assert np.all(np.abs(degenerate.predict_proba(mixed.matrix) - 0.7) < 1e-6)


def boost_oracle_best_split(X, g, h, l1, l2, min_child_weight):
    """Exhaustive second-order gain search over every column and boundary."""

    def soft(v):
        if v > l1:
            return v - l1
        if v < -l1:
            return v + l1
        return 0.0

    def score(gs, hs):
        t = soft(gs)
        return t * t / (hs + l2)

    n, p = X.shape
    g_sum, h_sum = g.sum(), h.sum()
    parent = score(g_sum, h_sum)
    best = (0.0, None, None)
    for f in range(p):
        order = np.argsort(X[:, f], kind="stable")
        gl = hl = 0.0
        for t in range(n - 1):
            i = order[t]
            gl += g[i]
            hl += h[i]
            v_cur, v_nxt = X[order[t], f], X[order[t + 1], f]
            if v_nxt <= v_cur:
                continue
            if hl < min_child_weight or h_sum - hl < min_child_weight:
                continue
            gain = 0.5 * (score(gl, hl) + score(g_sum - gl, h_sum - hl) - parent)
            if gain > best[0]:
                best = (gain, f, 0.5 * (v_cur + v_nxt))
    return best


def test_first_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(29)
    for seed in range(5):
        X = rng.normal(size=(50, 2))
        y = (X[:, 0] + 0.3 * X[:, 1] > 0.1).astype(float)
        w = rng.uniform(0.5, 2.0, 50)
        pool = pool_from(X, y, w)
        config = BoostConfig(
            n_trees=1,
            max_depth=1,
            row_subsample=1.0,
            col_subsample=1.0,
            min_child_weight=1.0,
        )
        model = train_gbdt(pool, config, seed=seed)
        tree = model.trees[0]
        # recompute the gradients the first round sees
        prevalence = float(np.dot(w, y) / w.sum())
        base = np.log(prevalence / (1 - prevalence))
        prob = 1.0 / (1.0 + np.exp(-base))
        g = w * (prob - y)
        h = w * prob * (1.0 - prob)
        gain, f, thr = boost_oracle_best_split(
            X, g, h, config.l1, config.l2, config.min_child_weight
        )
        assert tree.feature[0] == f
        assert tree.threshold[0] == thr
        assert tree.gain[0] == pytest.approx(gain, rel=1e-12)


def test_min_child_weight_blocks_small_children():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    pool = pool_from(X, y)
    model = train_gbdt(
        pool, BoostConfig(n_trees=1, min_child_weight=10.0, row_subsample=1.0), seed=0
    )
    assert model.trees[0].n_nodes == 1  # no split can satisfy the hessian floor


def test_gain_ledger_matches_tree_dump():
    pool = random_pool(n=300, p=2, seed=11)
    model = train_gbdt(
        pool,
        BoostConfig(n_trees=40, row_subsample=1.0, col_subsample=1.0),
        seed=4,
    )
    hand = np.zeros(2)
    for tree in model.trees:
        for node in range(tree.n_nodes):
            if tree.feature[node] >= 0:
                hand[tree.feature[node]] += tree.gain[node]
    assert np.array_equal(model.total_gain, hand)
    importance = gain_importance(model)
    assert importance.sum() == pytest.approx(1.0, abs=1e-9)
    assert importance[0] / importance[1] == pytest.approx(hand[0] / hand[1], rel=1e-12)
    assert np.all(model.per_tree_gains >= 0.0)


def test_single_feature_gets_full_importance():
    rng = np.random.default_rng(19)
    X = np.column_stack([rng.normal(size=250), np.zeros(250)])
    y = X[:, 0] > 0
    pool = pool_from(X, y)
    model = train_gbdt(pool, BoostConfig(n_trees=30, col_subsample=1.0), seed=3)
    importance = gain_importance(model)
    assert importance[0] == pytest.approx(1.0)
    assert importance[1] == 0.0


def test_bit_for_bit_determinism():
    pool = random_pool(n=350, seed=8)
    a = train_gbdt(pool, BoostConfig(n_trees=50), seed=21)
    b = train_gbdt(pool, BoostConfig(n_trees=50), seed=21)
    assert np.array_equal(a.predict_proba(pool.matrix), b.predict_proba(pool.matrix))
    assert a.training_loss == b.training_loss
    c = train_gbdt(pool, BoostConfig(n_trees=50), seed=22)
    assert not np.array_equal(a.predict_proba(pool.matrix), c.predict_proba(pool.matrix))


def test_weight_two_equals_duplication_without_subsampling():
    rng = np.random.default_rng(41)
    X = rng.normal(size=(80, 3))
    y = X[:, 0] > 0.1
    weights = np.ones(80)
    weights[5] = 2.0
    config = BoostConfig(n_trees=12, row_subsample=1.0, col_subsample=1.0)
    a = train_gbdt(pool_from(X, y, weights), config, seed=2)
    b = train_gbdt(
        pool_from(np.vstack([X, X[5]]), np.concatenate([y, [y[5]]])), config, seed=2
    )
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)


def test_depth_limit_and_serialization(tmp_path):
    pool = random_pool(n=500, seed=10)
    model = train_gbdt(pool, BoostConfig(n_trees=30, max_depth=4), seed=6)
    assert max(tree.max_depth() for tree in model.trees) <= 4
    probs = model.predict_proba(pool.matrix)
    path = tmp_path / "gbdt.json"
    save_model(model, path)
    reloaded = load_model(path)
    assert np.array_equal(probs, reloaded.predict_proba(pool.matrix))
    assert np.array_equal(model.total_gain, reloaded.total_gain)
