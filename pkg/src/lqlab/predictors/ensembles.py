"""Bagged forest and gradient-boosted trees on top of :mod:`.trees`."""

from __future__ import annotations

import math

import numpy as np

from .trees import Tree, bin_codes, bin_edges, build_hist_tree, build_tree


def fit_forest(X: np.ndarray, y: np.ndarray, m: int, hp: dict,
               rng: np.random.Generator) -> dict:
    """Bootstrap-aggregated CART trees.

    Each tree draws its own child stream from ``rng`` up front, so tree ``i``
    is identical whether trees are grown serially or in parallel.
    """
    Y = np.eye(m)[y]
    n, p = X.shape
    max_features = hp["max_features"] or max(1, int(math.sqrt(p)))
    trees = []
    for child in rng.spawn(hp["n_trees"]):
        boot = child.integers(0, n, size=n)
        Xb = X[boot]
        trees.append(build_tree(Xb, Y[boot], max_depth=hp["max_depth"],
                                min_samples_leaf=hp["min_samples_leaf"],
                                max_features=max_features, rng=child))
    return {"trees": trees}


def forest_proba(state: dict, X: np.ndarray) -> np.ndarray:
    return np.mean([t.predict_value(X) for t in state["trees"]], axis=0)


def fit_gbdt(X: np.ndarray, y: np.ndarray, m: int, hp: dict,
             rng: np.random.Generator) -> dict:
    """Multiclass gradient boosting on the softmax cross-entropy.

    Every round fits one regression tree per class to the residual
    ``onehot - softmax(F)``; leaves take the one-step Newton value
    ``(m-1)/m * sum(r) / (sum(|r|(1-|r|)) + l2)``. Splits are searched over
    at most ``max_bins`` quantile cut points per feature. With two classes
    the residuals of the classes are exact negatives of each other, so one
    tree is grown per round and its mirror image reused.
    """
    n = len(X)
    Y = np.eye(m)[y]
    prior = np.clip(Y.mean(axis=0), 1e-6, None)
    base = np.log(prior / prior.sum())
    F = np.tile(base, (n, 1))
    edges = bin_edges(X, hp["max_bins"])
    codes = bin_codes(X, edges)
    lr, l2 = hp["learning_rate"], hp["l2"]
    scale = (m - 1) / m
    rounds = []
    for _ in range(hp["n_rounds"]):
        P = np.exp(F - F.max(axis=1, keepdims=True))
        P /= P.sum(axis=1, keepdims=True)
        R = Y - P
        fitted = {}
        for k in ([1] if m == 2 else range(m)):
            r = R[:, k]

            def leaf_value(idx, r=r):
                num = r[idx].sum()
                den = (np.abs(r[idx]) * (1.0 - np.abs(r[idx]))).sum() + l2
                return scale * num / den if den > 1e-12 else 0.0

            fitted[k] = build_hist_tree(codes, edges, r, max_depth=hp["max_depth"],
                                        min_samples_leaf=hp["min_samples_leaf"],
                                        leaf_value=leaf_value)
        if m == 2:
            t = fitted[1]
            fitted[0] = Tree(t.feature, t.threshold, t.left, t.right, -t.value)
        per_class = [fitted[k] for k in range(m)]
        for k, tree in enumerate(per_class):
            F[:, k] += lr * tree.predict_value(X)[:, 0]
        rounds.append(per_class)
    return {"base": base, "learning_rate": np.array(lr), "rounds": rounds}


def gbdt_scores(state: dict, X: np.ndarray) -> np.ndarray:
    lr = float(state["learning_rate"])
    F = np.tile(np.asarray(state["base"], dtype=float), (len(X), 1))
    for per_class in state["rounds"]:
        for k, tree in enumerate(per_class):
            F[:, k] += lr * tree.predict_value(X)[:, 0]
    return F
