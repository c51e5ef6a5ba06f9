"""Exact greedy, level-wise decision tree growth shared by both boosters.

A tree is grown from a per-row statistics matrix. Two criteria are supported:

* ``NEWTON``: statistics are ``(gradient, hessian)``; a node scores
  ``G**2 / (H + l2)`` and its leaf value is ``-G / (H + l2)``.
* ``GINI``: statistics are ``(weight, weight * y)``; a node scores
  ``(Wp**2 + Wn**2) / W`` (the negated weighted Gini impurity up to a
  constant) and its leaf value is the weighted positive fraction ``Wp / W``.

Split candidates are the midpoints between consecutive distinct values of a
feature inside a node. Rows go left when ``x <= threshold``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

NEWTON = 0
GINI = 1

_GAIN_EPS = 1e-10


@njit(cache=True)
def _node_score(a, b, criterion, l2):
    if criterion == NEWTON:
        return a * a / (b + l2)
    if a <= 0.0:
        return 0.0
    return (b * b + (a - b) * (a - b)) / a


@njit(cache=True)
def _admissible(a, b, criterion, min_child):
    if criterion == NEWTON:
        return b >= min_child
    return a > 0.0 and a >= min_child


@njit(cache=True)
def _scan_level(order, xs, node_of, sa, sb, ta, tb, criterion, l2, min_child,
                best_gain, best_feat, best_thr):
    n_feat, n_rows = order.shape
    n_nodes = ta.shape[0]
    parent = np.empty(n_nodes)
    for j in range(n_nodes):
        parent[j] = _node_score(ta[j], tb[j], criterion, l2)
    run_a = np.zeros(n_nodes)
    run_b = np.zeros(n_nodes)
    last = np.zeros(n_nodes)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    for f in range(n_feat):
        run_a[:] = 0.0
        run_b[:] = 0.0
        seen[:] = False
        for t in range(n_rows):
            i = order[f, t]
            j = node_of[i]
            if j < 0:
                continue
            x = xs[f, t]
            if seen[j] and x > last[j]:
                la = run_a[j]
                lb = run_b[j]
                ra = ta[j] - la
                rb = tb[j] - lb
                if (_admissible(la, lb, criterion, min_child)
                        and _admissible(ra, rb, criterion, min_child)):
                    gain = (_node_score(la, lb, criterion, l2)
                            + _node_score(ra, rb, criterion, l2) - parent[j])
                    if gain > best_gain[j]:
                        best_gain[j] = gain
                        best_feat[j] = f
                        lo = last[j]
                        mid = lo + 0.5 * (x - lo)
                        best_thr[j] = mid if mid < x else lo
            run_a[j] += sa[i]
            run_b[j] += sb[i]
            last[j] = x
            seen[j] = True


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        k = 0
        while feature[k] >= 0:
            if X[i, feature[k]] <= threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[i] = k
    return out


@dataclass(frozen=True)
class Tree:
    """Flat array representation; ``feature[k] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[k] + 1
                depth[self.right[k]] = depth[k] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        return _apply(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
        )


@dataclass(frozen=True)
class Presorted:
    """Per-feature ascending row order and the matching sorted values.

    Both arrays are feature-major, ``(n_features, n_rows)``, so the split scan
    walks contiguous memory.
    """

    order: np.ndarray
    values: np.ndarray


def presort(X: np.ndarray) -> Presorted:
    """Column-wise stable argsort, computed once per training set."""
    X = np.asarray(X, dtype=np.float64)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))
    values = np.ascontiguousarray(np.take_along_axis(X, order.T, axis=0).T)
    return Presorted(order=order, values=values)


def _leaf_value(a: float, b: float, criterion: int, l2: float) -> float:
    if criterion == NEWTON:
        return -a / (b + l2)
    return b / a if a > 0 else 0.5


def grow_tree(
    X: np.ndarray,
    order: Presorted,
    stats: np.ndarray,
    criterion: int,
    max_depth: int,
    l2: float = 0.0,
    min_child: float = 0.0,
) -> Tree:
    """Grow one tree level by level with exact greedy split search.

    ``order`` must be ``presort(X)``. ``stats`` is an ``(n_rows, 2)`` array
    whose meaning depends on ``criterion``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    stats = np.asarray(stats, dtype=np.float64)
    sa = np.ascontiguousarray(stats[:, 0])
    sb = np.ascontiguousarray(stats[:, 1])
    n = X.shape[0]

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [0.0]

    node_of = np.zeros(n, dtype=np.int32)
    frontier = [0]
    for level in range(max_depth + 1):
        k = len(frontier)
        if k == 0:
            break
        active = node_of >= 0
        idx = node_of[active]
        ta = np.bincount(idx, weights=sa[active], minlength=k)
        tb = np.bincount(idx, weights=sb[active], minlength=k)
        best_feat = np.full(k, -1, dtype=np.int64)
        best_thr = np.zeros(k)
        if level < max_depth:
            parent = np.array([_node_score(ta[j], tb[j], criterion, l2) for j in range(k)])
            best_gain = _GAIN_EPS * np.maximum(1.0, np.abs(parent))
            _scan_level(order.order, order.values, node_of, sa, sb, ta, tb, criterion, float(l2),
                        float(min_child), best_gain, best_feat, best_thr)

        remap = np.full(k, -1, dtype=np.int32)
        next_frontier = []
        for j, tree_node in enumerate(frontier):
            if best_feat[j] < 0:
                value[tree_node] = _leaf_value(ta[j], tb[j], criterion, l2)
                continue
            feature[tree_node] = int(best_feat[j])
            threshold[tree_node] = float(best_thr[j])
            for side in (left, right):
                side[tree_node] = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
            remap[j] = len(next_frontier)
            next_frontier.extend([left[tree_node], right[tree_node]])

        rows = np.flatnonzero(active)
        j_rows = node_of[rows]
        new_pos = remap[j_rows]
        split_rows = new_pos >= 0
        r = rows[split_rows]
        j = j_rows[split_rows]
        go_right = X[r, best_feat[j]] > best_thr[j]
        node_of[rows[~split_rows]] = -1
        node_of[r] = new_pos[split_rows] + go_right
        frontier = next_frontier

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )
