"""Randomness and accuracy metrics for labeled sample sets and predictors.

Notation follows the usual one for this analysis: ``p_tu`` is the
probability that a sample whose label "should" be ``t`` is marked ``u``,
``R_i(t)`` the share of the whole set that lies in environment ``i`` with
label ``t``. All entropies are in bits with ``0 * log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, delivery_rate
from .dataset import EnvDescriptor, SampleSet, n_classes

ANALYTIC = "analytic"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class MislabelMatrix:
    scheme: str
    rows: np.ndarray

    def __post_init__(self) -> None:
        m = n_classes(self.scheme)
        rows = np.asarray(self.rows, dtype=float)
        if rows.shape != (m, m):
            raise ValueError(f"{self.scheme} mislabel matrix must be {m}x{m}")
        if np.any(rows < 0) or np.any(rows > 1):
            raise ValueError("mislabel probabilities must lie in [0, 1]")
        if not np.allclose(rows.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("mislabel rows must sum to 1")
        object.__setattr__(self, "rows", rows)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.rows)

    def entropies(self) -> np.ndarray:
        """Per-label randomness ``U_i(t)``, one value per row."""
        return np.array([label_entropy(r) for r in self.rows])


@dataclass(frozen=True)
class EnvRandomness:
    env_id: int
    u: np.ndarray       # U_i(t)
    ratios: np.ndarray  # R_i(t)
    diag: np.ndarray    # p_tt


@dataclass(frozen=True)
class RandomnessReport:
    U: float
    A: float
    acc_max: float
    per_env: tuple[EnvRandomness, ...]
    source: str = ANALYTIC


@dataclass
class PredictionReport:
    confusion: np.ndarray   # rows: true label, columns: predicted label
    acc: float
    u_p: float
    r_p: np.ndarray
    p_prime: np.ndarray     # row t: distribution of the true label given prediction t
    acc_max: float = float("nan")
    U: float = float("nan")
    name: str = ""
    extra: dict = field(default_factory=dict)


def binomial_pmf_desc(p: float, n: int = 3) -> np.ndarray:
    """``P(k successes)`` for ``k = n, n-1, ..., 0`` (G, MG, MB, B order)."""
    from math import comb

    k = np.arange(n, -1, -1)
    return np.array([comb(n, int(j)) for j in k]) * p ** k * (1.0 - p) ** (n - k)


def marginal_for_rate(p: float, scheme: str) -> np.ndarray:
    """Label distribution of one link with delivery rate ``p``."""
    if n_classes(scheme) == 2:
        return np.array([1.0 - p, p])
    return binomial_pmf_desc(p, 3)


def analytic_mislabel(d: float, params: ChannelParams, scheme: str) -> MislabelMatrix:
    """Closed-form ``p_tu`` for a link of length ``d``: every row is the label
    distribution implied by the delivery rate ``p(d)``."""
    row = marginal_for_rate(delivery_rate(d, params), scheme)
    return MislabelMatrix(scheme, np.tile(row, (len(row), 1)))


def env_analytic_mislabel(env: EnvDescriptor, params: ChannelParams,
                          scheme: str) -> MislabelMatrix:
    """Analytic matrix of an environment holding several node pairs: the
    sample-count-weighted mixture of the per-pair matrices."""
    w = np.asarray(env.pair_counts, dtype=float)
    if w.sum() <= 0:
        raise ValueError(f"environment {env.env_id} has no samples")
    rows = sum(wi * analytic_mislabel(d, params, scheme).rows
               for d, wi in zip(env.pair_distances, w))
    rows = rows / w.sum()
    return MislabelMatrix(scheme, rows / rows.sum(axis=1, keepdims=True))


def empirical_mislabel(labels, scheme: str) -> MislabelMatrix:
    """Estimate ``p_tu`` from the labels of one environment.

    Every row is the empirical label marginal.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cannot estimate a mislabel matrix from an empty environment")
    m = n_classes(scheme)
    row = np.bincount(labels, minlength=m)[:m] / labels.size
    return MislabelMatrix(scheme, np.tile(row, (m, 1)))


def label_entropy(row) -> float:
    """Shannon entropy (bits) of one probability row."""
    p = np.asarray(row, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probability row must sum to 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def set_randomness(sset: SampleSet, mislabel_source: str = ANALYTIC,
                   params: ChannelParams | None = None,
                   matrices: dict[int, MislabelMatrix] | None = None) -> RandomnessReport:
    """Randomness ``U``, intrinsic accuracy ``A`` and reference ``Acc_max``.

    ``matrices`` overrides the per-environment mislabel matrices; otherwise
    they come from the channel (``analytic``, needs ``params``) or from the
    labels in each environment (``empirical``).
    """
    if len(sset) == 0:
        raise ValueError("empty sample set")
    if mislabel_source not in (ANALYTIC, EMPIRICAL):
        raise ValueError(f"unknown mislabel source {mislabel_source!r}")
    if mislabel_source == ANALYTIC and params is None and matrices is None:
        if "params" not in sset.meta:
            raise ValueError("analytic mislabel source needs channel params")
        params = ChannelParams.from_dict(sset.meta["params"])
    m = sset.n_classes
    N = len(sset)
    U = A = best_const = 0.0
    per_env = []
    for env in sset.envs:
        mask = sset.env_ids == env.env_id
        if not mask.any():
            continue
        labels = sset.labels[mask]
        if matrices is not None:
            if env.env_id not in matrices:
                raise ValueError(f"no mislabel matrix for environment {env.env_id}")
            mat = matrices[env.env_id]
        elif mislabel_source == ANALYTIC:
            mat = env_analytic_mislabel(env, params, sset.scheme)
        else:
            mat = empirical_mislabel(labels, sset.scheme)
        ratios = np.bincount(labels, minlength=m)[:m] / N
        u = mat.entropies()
        U += float(u @ ratios)
        A += float(ratios @ mat.diagonal)
        best_const += float(ratios.max())
        per_env.append(EnvRandomness(env.env_id, u, ratios, mat.diagonal))
    return RandomnessReport(U, A, max(A, best_const), tuple(per_env), mislabel_source)


def confusion_matrix(true_labels, predicted_labels, m: int) -> np.ndarray:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    return np.bincount(t * m + p, minlength=m * m).reshape(m, m)


def predictor_randomness(true_labels, predicted_labels, m: int | None = None) -> PredictionReport:
    """Randomness ``U_p`` of a predictor's output.

    ``p'_tu`` is taken as the share of true label ``u`` among samples the
    predictor labeled ``t``; each predicted label is weighted by how often
    it is emitted, ``R_p(t)``. Labels never predicted contribute nothing.
    """
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError("true and predicted label sequences differ in length")
    if t.size == 0:
        raise ValueError("empty label sequences")
    if m is None:
        m = int(max(t.max(), p.max())) + 1
    conf = confusion_matrix(t, p, m)
    total = conf.sum()
    per_pred = conf.sum(axis=0)
    r_p = per_pred / total
    p_prime = np.zeros((m, m))
    u_p = 0.0
    for lab in range(m):
        if per_pred[lab] == 0:
            continue
        p_prime[lab] = conf[:, lab] / per_pred[lab]
        u_p += r_p[lab] * label_entropy(p_prime[lab])
    return PredictionReport(conf, float(np.trace(conf) / total), float(u_p), r_p, p_prime)


ENV_REPORT_HEADER = ("env_id", "d", "U", "A", "acc_max")


def env_report_rows(sset: SampleSet, report: RandomnessReport) -> list[tuple]:
    """Per-environment rows ``env_id,d,U,A,acc_max`` with values normalized
    within the environment (so each row reads as a one-environment set)."""
    rows = []
    for er in report.per_env:
        share = er.ratios.sum()
        if share == 0:
            continue
        r = er.ratios / share
        env = sset.env(er.env_id)
        a = float(r @ er.diag)
        rows.append((er.env_id, env.center, float(er.u @ r), a, max(a, float(r.max()))))
    return rows


def confusion_header(m: int) -> list[str]:
    return [f"c_{i}{j}" for i in range(m) for j in range(m)]


def binary_entropy(p):
    """Entropy in bits of a Bernoulli(p) variable, elementwise."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    h = h + 0.0
    return float(h) if h.ndim == 0 else h
