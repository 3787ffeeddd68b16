"""One-hidden-layer perceptron: logistic hidden units, softmax output,
mean cross-entropy loss, mini-batch gradient descent."""

from __future__ import annotations

import numpy as np

GRAD_CHECK_TOL = 1e-4
GRAD_CHECK_SAMPLES = 10


class GradientCheckError(RuntimeError):
    pass


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator) -> dict:
    return {
        "W1": rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.normal(0.0, 1.0 / np.sqrt(n_hidden), size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def forward(params: dict, X: np.ndarray):
    h = _sigmoid(X @ params["W1"] + params["b1"])
    return h, _softmax(h @ params["W2"] + params["b2"])


def loss(params: dict, X: np.ndarray, Y: np.ndarray) -> float:
    _, P = forward(params, X)
    return float(-np.mean(np.sum(Y * np.log(np.clip(P, 1e-300, None)), axis=1)))


def loss_and_grad(params: dict, X: np.ndarray, Y: np.ndarray):
    n = len(X)
    h, P = forward(params, X)
    L = float(-np.mean(np.sum(Y * np.log(np.clip(P, 1e-300, None)), axis=1)))
    dz2 = (P - Y) / n
    dh = dz2 @ params["W2"].T
    dz1 = dh * h * (1.0 - h)
    grads = {
        "W2": h.T @ dz2,
        "b2": dz2.sum(axis=0),
        "W1": X.T @ dz1,
        "b1": dz1.sum(axis=0),
    }
    return L, grads


def numeric_grad(params: dict, X: np.ndarray, Y: np.ndarray, eps: float = 1e-6) -> dict:
    """Central finite differences of :func:`loss`, one coordinate at a time."""
    out = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = arr[i]
            arr[i] = old + eps
            up = loss(params, X, Y)
            arr[i] = old - eps
            down = loss(params, X, Y)
            arr[i] = old
            g[i] = (up - down) / (2 * eps)
        out[name] = g
    return out


def gradient_check(params: dict, X: np.ndarray, Y: np.ndarray) -> float:
    """Largest relative error ``|g_a - g_n| / (|g_a| + |g_n|)`` over the
    parameter arrays, so an error in one small block is not diluted."""
    _, ga = loss_and_grad(params, X, Y)
    gn = numeric_grad({k: v.copy() for k, v in params.items()}, X, Y)
    worst = 0.0
    for k in params:
        a, b = ga[k].ravel(), gn[k].ravel()
        denom = np.linalg.norm(a) + np.linalg.norm(b)
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(a - b) / denom))
    return worst


def fit(X: np.ndarray, y: np.ndarray, m: int, hp: dict, rng: np.random.Generator) -> dict:
    Y = np.eye(m)[y]
    params = init_params(X.shape[1], hp["hidden"], m, rng)
    probe = slice(0, min(GRAD_CHECK_SAMPLES, len(X)))
    err = gradient_check(params, X[probe], Y[probe])
    if not err <= GRAD_CHECK_TOL:
        raise GradientCheckError(f"backprop disagrees with finite differences (rel. err {err:.2e})")
    lr, bs = hp["learning_rate"], hp["batch_size"]
    n = len(X)
    for _ in range(hp["epochs"]):
        perm = rng.permutation(n)
        for start in range(0, n, bs):
            b = perm[start:start + bs]
            _, g = loss_and_grad(params, X[b], Y[b])
            for k in params:
                params[k] -= lr * g[k]
    params["grad_check_rel_err"] = np.array(err)
    return params


def predict_proba(params: dict, X: np.ndarray) -> np.ndarray:
    return forward(params, X)[1]
