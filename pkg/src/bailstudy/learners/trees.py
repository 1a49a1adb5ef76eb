"""Array-backed decision trees and the numba split-search kernels.

Both tree learners use exact scans over sorted unique feature values, no
histogramming: determinism and oracle-checkability matter more than speed at
this scale. Each column is argsorted once per tree and the sorted orders are
stable-partitioned down the tree, so deeper nodes never re-sort. Split
thresholds are midpoints between adjacent distinct values and rows go left
when ``x < threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature[i] < 0`` marks node ``i`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def max_depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        stack = [0]
        deepest = 0
        while stack:
            node = stack.pop()
            if self.feature[node] >= 0:
                for child in (self.left[node], self.right[node]):
                    depths[child] = depths[node] + 1
                    deepest = max(deepest, int(depths[child]))
                    stack.append(int(child))
        return deepest


def allocate_capacity(max_depth: int) -> int:
    return 2 ** (max_depth + 1) - 1


@njit(cache=True)
def _presort_columns(X, rows, cols):  # pragma: no cover - via the growers
    n = rows.shape[0]
    ncols = cols.shape[0]
    sorted_idx = np.empty((ncols, n), np.int64)
    sorted_val = np.empty((ncols, n), np.float64)
    vals = np.empty(n, np.float64)
    for jj in range(ncols):
        f = cols[jj]
        for t in range(n):
            vals[t] = X[rows[t], f]
        order = np.argsort(vals)
        for t in range(n):
            sorted_idx[jj, t] = rows[order[t]]
            sorted_val[jj, t] = vals[order[t]]
    return sorted_idx, sorted_val


@njit(cache=True)
def _partition_sorted(
    sorted_idx, sorted_val, lo, hi, jj_best, thr, go_left, tmp_idx, tmp_val
):  # pragma: no cover
    """Stable-partition every column's sorted slice by ``x[best] < thr``.

    Duplicate rows (bootstrap multiplicity) share one mask slot, which is
    safe because equal rows always fall on the same side.
    """
    for t in range(lo, hi):
        go_left[sorted_idx[jj_best, t]] = sorted_val[jj_best, t] < thr
    nl = 0
    for jj in range(sorted_idx.shape[0]):
        nl = 0
        for t in range(lo, hi):
            row = sorted_idx[jj, t]
            if go_left[row]:
                tmp_idx[nl] = row
                tmp_val[nl] = sorted_val[jj, t]
                nl += 1
        k = nl
        for t in range(lo, hi):
            row = sorted_idx[jj, t]
            if not go_left[row]:
                tmp_idx[k] = row
                tmp_val[k] = sorted_val[jj, t]
                k += 1
        for t in range(hi - lo):
            sorted_idx[jj, lo + t] = tmp_idx[t]
            sorted_val[jj, lo + t] = tmp_val[t]
    return nl


@njit(cache=True)
def _grow_gini_tree(
    X,
    y01,
    w,
    rows,
    max_depth,
    min_samples_leaf,
    n_candidates,
    seed,
    feature,
    threshold,
    left,
    right,
    value,
):  # pragma: no cover - exercised through train_random_forest
    np.random.seed(seed)
    n = rows.shape[0]
    p = X.shape[1]
    all_cols = np.arange(p)
    sorted_idx, sorted_val = _presort_columns(X, rows, all_cols)
    cap = feature.shape[0]

    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    top = 0
    stack_node[top] = 0
    stack_lo[top] = 0
    stack_hi[top] = n
    stack_depth[top] = 0
    top += 1
    n_nodes = 1

    perm = np.empty(p, np.int64)
    tmp_idx = np.empty(n, np.int64)
    tmp_val = np.empty(n, np.float64)
    go_left = np.zeros(X.shape[0], np.uint8)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        cnt = hi - lo

        w_tot = 0.0
        w_pos = 0.0
        for t in range(lo, hi):
            row = sorted_idx[0, t]
            w_tot += w[row]
            w_pos += w[row] * y01[row]
        leaf_value = w_pos / w_tot

        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        if depth < max_depth and cnt >= 2 * min_samples_leaf and 0.0 < w_pos < w_tot:
            w_neg = w_tot - w_pos
            parent_score = (w_pos * w_pos + w_neg * w_neg) / w_tot
            for j in range(p):
                perm[j] = j
            for j in range(n_candidates):
                r = j + np.random.randint(0, p - j)
                swap = perm[j]
                perm[j] = perm[r]
                perm[r] = swap
            for jj in range(n_candidates):
                f = perm[jj]
                wl = 0.0
                wpl = 0.0
                for t in range(lo, hi - 1):
                    row = sorted_idx[f, t]
                    wl += w[row]
                    wpl += w[row] * y01[row]
                    v_cur = sorted_val[f, t]
                    v_nxt = sorted_val[f, t + 1]
                    if v_nxt <= v_cur:
                        continue
                    pos = t - lo + 1
                    if pos < min_samples_leaf or cnt - pos < min_samples_leaf:
                        continue
                    wr = w_tot - wl
                    wpr = w_pos - wpl
                    wnl = wl - wpl
                    wnr = wr - wpr
                    score = (wpl * wpl + wnl * wnl) / wl + (wpr * wpr + wnr * wnr) / wr
                    gain = score - parent_score
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = 0.5 * (v_cur + v_nxt)

        if best_f < 0:
            feature[node] = -1
            value[node] = leaf_value
            continue

        nl = _partition_sorted(
            sorted_idx, sorted_val, lo, hi, best_f, best_thr, go_left, tmp_idx, tmp_val
        )

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        value[node] = leaf_value

        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = right_id
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1

    return n_nodes


@njit(cache=True)
def _soft_threshold(g, l1):  # pragma: no cover
    if g > l1:
        return g - l1
    if g < -l1:
        return g + l1
    return 0.0


@njit(cache=True)
def _grow_boost_tree(
    X,
    g,
    h,
    rows,
    cols,
    max_depth,
    min_child_weight,
    l1,
    l2,
    feature,
    threshold,
    left,
    right,
    value,
    gain_out,
):  # pragma: no cover - exercised through train_gbdt
    n = rows.shape[0]
    ncols = cols.shape[0]
    sorted_idx, sorted_val = _presort_columns(X, rows, cols)
    cap = feature.shape[0]

    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    top = 0
    stack_node[top] = 0
    stack_lo[top] = 0
    stack_hi[top] = n
    stack_depth[top] = 0
    top += 1
    n_nodes = 1

    tmp_idx = np.empty(n, np.int64)
    tmp_val = np.empty(n, np.float64)
    go_left = np.zeros(X.shape[0], np.uint8)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        cnt = hi - lo

        g_sum = 0.0
        h_sum = 0.0
        for t in range(lo, hi):
            row = sorted_idx[0, t]
            g_sum += g[row]
            h_sum += h[row]
        tg = _soft_threshold(g_sum, l1)
        parent_score = tg * tg / (h_sum + l2)
        leaf_value = -tg / (h_sum + l2)

        best_gain = 0.0
        best_f = -1
        best_jj = 0
        best_thr = 0.0
        if depth < max_depth and cnt >= 2:
            for jj in range(ncols):
                gl = 0.0
                hl = 0.0
                for t in range(lo, hi - 1):
                    row = sorted_idx[jj, t]
                    gl += g[row]
                    hl += h[row]
                    v_cur = sorted_val[jj, t]
                    v_nxt = sorted_val[jj, t + 1]
                    if v_nxt <= v_cur:
                        continue
                    hr = h_sum - hl
                    if hl < min_child_weight or hr < min_child_weight:
                        continue
                    gr = g_sum - gl
                    tl = _soft_threshold(gl, l1)
                    tr = _soft_threshold(gr, l1)
                    score = tl * tl / (hl + l2) + tr * tr / (hr + l2)
                    gain = 0.5 * (score - parent_score)
                    if gain > best_gain:
                        best_gain = gain
                        best_f = cols[jj]
                        best_jj = jj
                        best_thr = 0.5 * (v_cur + v_nxt)

        if best_f < 0:
            feature[node] = -1
            value[node] = leaf_value
            continue

        nl = _partition_sorted(
            sorted_idx, sorted_val, lo, hi, best_jj, best_thr, go_left, tmp_idx, tmp_val
        )

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        value[node] = leaf_value
        gain_out[node] = best_gain

        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = right_id
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1

    return n_nodes


@njit(cache=True)
def _predict_sum(
    X, feature, threshold, left, right, value, offsets, out
):  # pragma: no cover
    n = X.shape[0]
    for t in range(offsets.shape[0] - 1):
        base = offsets[t]
        for i in range(n):
            node = 0
            f = feature[base + node]
            while f >= 0:
                if X[i, f] < threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
                f = feature[base + node]
            out[i] += value[base + node]


@njit(cache=True)
def _predict_single(X, feature, threshold, left, right, value, out):  # pragma: no cover
    for i in range(X.shape[0]):
        node = 0
        f = feature[node]
        while f >= 0:
            if X[i, f] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
            f = feature[node]
        out[i] = value[node]


def predict_single_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    _predict_single(
        X, tree.feature, tree.threshold, tree.left, tree.right, tree.value, out
    )
    return out


@dataclass(frozen=True)
class PackedTrees:
    """All trees of one ensemble concatenated for a single predict call."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_trees(cls, trees: tuple[Tree, ...]) -> "PackedTrees":
        offsets = np.zeros(len(trees) + 1, dtype=np.int64)
        for i, tree in enumerate(trees):
            offsets[i + 1] = offsets[i] + tree.n_nodes
        total = int(offsets[-1])
        feature = np.empty(total, dtype=np.int64)
        threshold = np.empty(total, dtype=np.float64)
        left = np.empty(total, dtype=np.int64)
        right = np.empty(total, dtype=np.int64)
        value = np.empty(total, dtype=np.float64)
        for i, tree in enumerate(trees):
            sl = slice(offsets[i], offsets[i + 1])
            feature[sl] = tree.feature
            threshold[sl] = tree.threshold
            left[sl] = tree.left
            right[sl] = tree.right
            value[sl] = tree.value
        return cls(feature, threshold, left, right, value, offsets)

    def leaf_value_sum(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0], dtype=np.float64)
        if self.offsets[-1] > 0:
            _predict_sum(
                np.ascontiguousarray(X, dtype=np.float64),
                self.feature,
                self.threshold,
                self.left,
                self.right,
                self.value,
                self.offsets,
                out,
            )
        return out


def grow_gini_tree(
    X: np.ndarray,
    y01: np.ndarray,
    w: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    n_candidates: int,
    seed: int,
) -> Tree:
    cap = allocate_capacity(max_depth)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    n_nodes = _grow_gini_tree(
        X,
        y01,
        w,
        rows,
        max_depth,
        min_samples_leaf,
        n_candidates,
        seed,
        feature,
        threshold,
        left,
        right,
        value,
    )
    return Tree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold[:n_nodes].copy(),
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
    )


def grow_boost_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    max_depth: int,
    min_child_weight: float,
    l1: float,
    l2: float,
) -> Tree:
    cap = allocate_capacity(max_depth)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    gain = np.zeros(cap, dtype=np.float64)
    n_nodes = _grow_boost_tree(
        X,
        g,
        h,
        rows,
        cols,
        max_depth,
        min_child_weight,
        l1,
        l2,
        feature,
        threshold,
        left,
        right,
        value,
        gain,
    )
    return Tree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold[:n_nodes].copy(),
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
        gain=gain[:n_nodes].copy(),
    )
