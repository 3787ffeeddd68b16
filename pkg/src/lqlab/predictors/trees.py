"""Array-backed CART used by the decision tree, the forest and boosting.

A split maximizes ``sum_c L_c^2 / n_L + sum_c R_c^2 / n_R`` where ``L_c``
and ``R_c`` are per-side column sums of a target matrix. With one-hot
targets this is the Gini decrease; with a single residual column it is the
squared-error decrease. Thresholds sit halfway between adjacent distinct
values, so any strictly increasing affine rescaling of a feature leaves the
fitted partition unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray    # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # (n_nodes, n_outputs)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active[r] = self.feature[node[r]] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64),
                   np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float))


def presort(X: np.ndarray) -> np.ndarray:
    return np.argsort(X, axis=0, kind="stable")


def _best_split(X, Y, order, features, min_leaf):
    """Return ``(gain, feature, threshold)`` or ``None`` when no split helps.

    ``order`` holds, per feature column, the node's sample indices sorted by
    that feature. Ties in gain go to the lowest feature, then the lowest
    threshold.
    """
    n = order.shape[0]
    if n < 2 * min_leaf:
        return None
    sub = order[:, features]                          # (n, f)
    xs = X[sub, features]                             # sorted values
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    if Y.shape[1] == 1:
        cum = np.cumsum(Y[:, 0][sub], axis=0)         # (n, f)
        total = cum[-1:]
        cl = cum[:-1]
        cr = total - cl
        score = cl * cl / nl + cr * cr / nr
        parent = float(total[0, 0] ** 2) / n
    else:
        cum = np.cumsum(Y[sub], axis=0)               # (n, f, c)
        total = cum[-1]                               # (f, c)
        cl = cum[:-1]
        score = (cl * cl).sum(-1) / nl + ((total - cl) ** 2).sum(-1) / nr   # (n-1, f)
        parent = float((total[0] ** 2).sum()) / n
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        pos = np.arange(1, n)[:, None]
        valid &= (pos >= min_leaf) & (n - pos >= min_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    # feature-major flattening so argmax breaks ties toward the lower feature
    flat = score.T.ravel()
    k = int(np.argmax(flat))
    j, i = divmod(k, n - 1)
    gain = flat[k] - parent
    if not gain > 1e-12 * max(1.0, abs(parent)):
        return None
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return gain, int(features[j]), float(thr)


def build_tree(X: np.ndarray, Y: np.ndarray, *, max_depth: int, min_samples_leaf: int = 1,
               min_samples_split: int = 2, max_features: int | None = None,
               rng: np.random.Generator | None = None,
               leaf_value: Callable[[np.ndarray], np.ndarray] | None = None,
               order: np.ndarray | None = None) -> Tree:
    """Grow a tree on targets ``Y`` of shape ``(n, c)``.

    ``leaf_value(idx)`` gives the stored value of a leaf holding rows
    ``idx``; by default it is the mean of ``Y`` over those rows (class
    proportions for one-hot targets). ``max_features`` draws that many
    candidate features per node from ``rng``. ``order`` may pass a
    precomputed :func:`presort` of ``X``.
    """
    n, p = X.shape
    if leaf_value is None:
        def leaf_value(idx):
            return Y[idx].mean(axis=0)
    if order is None:
        order = presort(X)
    all_features = np.arange(p)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(np.atleast_1d(np.asarray(leaf_value(idx), dtype=float)))
        return len(feature) - 1

    in_left = np.zeros(n, dtype=bool)
    stack = [(new_node(order[:, 0]), order, 0)]
    while stack:
        node, ordr, depth = stack.pop()
        m = ordr.shape[0]
        if depth >= max_depth or m < min_samples_split:
            continue
        idx = ordr[:, 0]
        if np.all(Y[idx] == Y[idx[0]]):
            continue
        if max_features is not None and max_features < p:
            feats = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feats = all_features
        found = _best_split(X, Y, ordr, feats, min_samples_leaf)
        if found is None:
            continue
        _, f, thr = found
        go_left = X[idx, f] <= thr
        in_left[idx] = go_left
        mask = in_left[ordr]                               # (m, p)
        n_left = int(go_left.sum())
        ord_l = ordr.T[mask.T].reshape(p, n_left).T
        ord_r = ordr.T[~mask.T].reshape(p, m - n_left).T
        in_left[idx] = False
        feature[node] = f
        threshold[node] = thr
        l_id = new_node(ord_l[:, 0])
        r_id = new_node(ord_r[:, 0])
        left[node], right[node] = l_id, r_id
        # right pushed first so the left subtree is expanded (and numbered) first
        stack.append((r_id, ord_r, depth + 1))
        stack.append((l_id, ord_l, depth + 1))

    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.vstack(value))


# --- histogram trees (boosting) --------------------------------------------

def bin_edges(X: np.ndarray, max_bins: int) -> list[np.ndarray]:
    """Per-feature split candidates: every distinct value when there are few,
    otherwise ``max_bins - 1`` quantile cut points taken from the data."""
    edges = []
    for col in X.T:
        uniq = np.unique(col)
        if len(uniq) <= max_bins:
            cuts = 0.5 * (uniq[:-1] + uniq[1:])
        else:
            q = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
            cuts = np.unique(np.quantile(col, q, method="lower"))
            cuts = cuts[cuts < uniq[-1]]
        edges.append(cuts)
    return edges


def bin_codes(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Bin index per cell; ``x <= edges[f][k]`` exactly when ``code <= k``."""
    return np.column_stack([np.searchsorted(e, X[:, j], side="left")
                            for j, e in enumerate(edges)]).astype(np.int64)


def build_hist_tree(codes: np.ndarray, edges: list[np.ndarray], y: np.ndarray, *,
                    max_depth: int, min_samples_leaf: int = 1,
                    leaf_value: Callable[[np.ndarray], float]) -> Tree:
    """Squared-error regression tree on pre-binned features."""
    n, p = codes.shape
    width = max(len(e) for e in edges) + 1
    flat = codes + np.arange(p) * width
    n_cuts = np.array([len(e) for e in edges])
    cut_ok = np.arange(width - 1)[None, :] < n_cuts[:, None]       # (p, width-1)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(np.atleast_1d(float(leaf_value(idx))))
        return len(feature) - 1

    root = np.arange(n)
    stack = [(new_node(root), root, 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = len(idx)
        if depth >= max_depth or m < 2 * min_samples_leaf or m < 2:
            continue
        f_idx = flat[idx].ravel()
        hs = np.bincount(f_idx, weights=np.repeat(y[idx], p), minlength=p * width)
        hn = np.bincount(f_idx, minlength=p * width)
        cs = np.cumsum(hs.reshape(p, width), axis=1)[:, :-1]
        cn = np.cumsum(hn.reshape(p, width), axis=1)[:, :-1].astype(float)
        total = float(y[idx].sum())
        nr = m - cn
        valid = cut_ok & (cn >= min_samples_leaf) & (nr >= min_samples_leaf) & (cn > 0) & (nr > 0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            score = cs * cs / cn + (total - cs) ** 2 / nr
        score = np.where(valid, score, -np.inf)
        k = int(np.argmax(score.ravel()))
        f, b = divmod(k, width - 1)
        parent = total * total / m
        if not score[f, b] - parent > 1e-12 * max(1.0, abs(parent)):
            continue
        go_left = codes[idx, f] <= b
        feature[node] = f
        threshold[node] = float(edges[f][b])
        l_id = new_node(idx[go_left])
        r_id = new_node(idx[~go_left])
        left[node], right[node] = l_id, r_id
        stack.append((r_id, idx[~go_left], depth + 1))
        stack.append((l_id, idx[go_left], depth + 1))

    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.vstack(value))
