"""Uniform train / predict / evaluate interface over the learner kinds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channel import ChannelParams
from ..dataset import RssiScaler, SampleSet, atomic_write_text, n_classes
from ..metrics import ANALYTIC, PredictionReport, predictor_randomness, set_randomness
from . import ensembles, mlp
from .trees import Tree, build_tree

MODEL_FORMAT = "lqlab-model"
MODEL_VERSION = 1

PRIOR = "prior-baseline"
TREE = "decision-tree"
FOREST = "random-forest"
MLP = "mlp"
GBDT = "gbdt"

# Row order used by compare_models
KIND_ORDER = (MLP, FOREST, TREE, GBDT, PRIOR)

DEFAULTS: dict[str, dict] = {
    PRIOR: {},
    TREE: {"max_depth": 8, "min_samples_leaf": 1},
    FOREST: {"n_trees": 50, "max_depth": 8, "min_samples_leaf": 1, "max_features": None},
    MLP: {"hidden": 16, "epochs": 200, "learning_rate": 0.05, "batch_size": 32},
    GBDT: {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1, "min_samples_leaf": 1,
           "l2": 0.0, "max_bins": 64},
}


@dataclass(frozen=True)
class PredictorConfig:
    """Learner kind, hyperparameters and seed.

    ``name`` labels the row in comparison tables and defaults to ``kind``.
    Unknown hyperparameter keys are rejected; missing ones take the
    defaults in :data:`DEFAULTS`.
    """

    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")

    @property
    def label(self) -> str:
        return self.name or self.kind

    def resolved(self) -> dict:
        hp = dict(DEFAULTS[self.kind])
        hp.update(self.hyperparameters)
        return hp

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": self.resolved(), "seed": self.seed,
                "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "PredictorConfig":
        extra = set(d) - {"kind", "hyperparameters", "seed", "name"}
        if extra:
            raise ValueError(f"unknown predictor config keys: {sorted(extra)}")
        return cls(d["kind"], dict(d.get("hyperparameters", {})), int(d.get("seed", 0)),
                   d.get("name", ""))


@dataclass
class TrainedModel:
    config: PredictorConfig
    scheme: str
    K: int
    scaler: RssiScaler
    state: dict
    metadata: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.config.kind

    @property
    def n_classes(self) -> int:
        return n_classes(self.scheme)


def train(config: PredictorConfig, train_set: SampleSet) -> TrainedModel:
    if len(train_set) == 0:
        raise ValueError("empty training set")
    m = train_set.n_classes
    scaler = RssiScaler.fit(train_set.features, train_set.sentinel_dbm)
    X = scaler.transform(train_set.features)
    y = train_set.labels
    hp = config.resolved()
    rng = np.random.default_rng(config.seed)
    counts = np.bincount(y, minlength=m)
    meta = {"n_train": int(len(y)), "label_counts": counts.tolist(), "degenerate": False}

    if config.kind == PRIOR or np.count_nonzero(counts) == 1:
        # a single-class training set can only give a constant predictor
        meta["degenerate"] = config.kind != PRIOR
        state = {"constant": np.array(int(np.argmax(counts)))}
    elif config.kind == TREE:
        tree = build_tree(X, np.eye(m)[y], max_depth=hp["max_depth"],
                          min_samples_leaf=hp["min_samples_leaf"])
        state = {"trees": [tree]}
    elif config.kind == FOREST:
        state = ensembles.fit_forest(X, y, m, hp, rng)
    elif config.kind == MLP:
        state = mlp.fit(X, y, m, hp, rng)
        meta["grad_check_rel_err"] = float(state.pop("grad_check_rel_err"))
    else:
        state = ensembles.fit_gbdt(X, y, m, hp, rng)
    return TrainedModel(config, train_set.scheme, train_set.K, scaler, state, meta)


def _argmax_low(scores: np.ndarray) -> np.ndarray:
    # np.argmax already returns the first maximum, i.e. the lowest label
    return np.argmax(scores, axis=1).astype(np.int64)


def predict_scores(model: TrainedModel, features) -> np.ndarray:
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != 2 * model.K:
        raise ValueError(f"expected {2 * model.K} features, got {X.shape[1]}")
    X = model.scaler.transform(X)
    s = model.state
    if "constant" in s:
        out = np.zeros((len(X), model.n_classes))
        out[:, int(s["constant"])] = 1.0
        return out
    if model.kind == TREE:
        return s["trees"][0].predict_value(X)
    if model.kind == FOREST:
        return ensembles.forest_proba(s, X)
    if model.kind == MLP:
        return mlp.predict_proba(s, X)
    return ensembles.gbdt_scores(s, X)


def predict(model: TrainedModel, features) -> np.ndarray:
    """Labels for a batch of raw feature rows (or a single row)."""
    single = np.ndim(features) == 1
    labels = _argmax_low(predict_scores(model, features))
    return labels[0] if single else labels


def evaluate(model: TrainedModel, test_set: SampleSet, mislabel_source: str = ANALYTIC,
             params: ChannelParams | None = None) -> PredictionReport:
    if len(test_set) == 0:
        raise ValueError("empty test set")
    if test_set.scheme != model.scheme or test_set.K != model.K:
        raise ValueError("test set scheme/K does not match the model")
    pred = predict(model, test_set.features)
    rep = predictor_randomness(test_set.labels, pred, test_set.n_classes)
    rand = set_randomness(test_set, mislabel_source, params)
    rep.acc_max = rand.acc_max
    rep.U = rand.U
    rep.name = model.config.label
    rep.extra = {"A": rand.A, "kind": model.kind}
    return rep


def compare_models(configs, train_set: SampleSet, test_set: SampleSet,
                   mislabel_source: str = ANALYTIC,
                   params: ChannelParams | None = None) -> list[PredictionReport]:
    """Train and evaluate each config; rows come back in :data:`KIND_ORDER`."""
    if not configs:
        raise ValueError("no predictor configs given")
    ranked = sorted(enumerate(configs), key=lambda ic: (KIND_ORDER.index(ic[1].kind), ic[0]))
    return [evaluate(train(c, train_set), test_set, mislabel_source, params) for _, c in ranked]


# --- persistence -----------------------------------------------------------

def _encode(obj):
    if isinstance(obj, Tree):
        return {"__tree__": _encode(obj.to_dict())}
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype), "shape": list(obj.shape)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__tree__" in obj:
            return Tree.from_dict(_decode(obj["__tree__"]))
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"]).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": model.config.to_dict(),
        "scheme": model.scheme,
        "K": model.K,
        "normalization": {"rssi_lo": model.scaler.lo, "rssi_hi": model.scaler.hi},
        "metadata": model.metadata,
        "state": _encode(model.state),
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"model version {doc.get('version')} != supported {MODEL_VERSION}")
    norm = doc["normalization"]
    return TrainedModel(PredictorConfig.from_dict(doc["config"]), doc["scheme"], int(doc["K"]),
                        RssiScaler(norm["rssi_lo"], norm["rssi_hi"]), _decode(doc["state"]),
                        doc["metadata"])


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    atomic_write_text(path, model_to_json(model) + "\n")
    return path


def load_model(path) -> TrainedModel:
    return model_from_json(Path(path).read_text())


def comparison_configs(seed: int = 0) -> list[PredictorConfig]:
    """The five rows of the model comparison: NN, RF, DT, GBDT and an
    XGBoost-style row served by the same boosting code with deeper trees,
    a larger step and L2-regularized leaves."""
    return [
        PredictorConfig(MLP, seed=seed, name="neural-network"),
        PredictorConfig(FOREST, seed=seed, name="random-forest"),
        PredictorConfig(TREE, seed=seed, name="decision-tree"),
        PredictorConfig(GBDT, seed=seed, name="gbdt"),
        PredictorConfig(GBDT, {"n_rounds": 60, "max_depth": 4, "learning_rate": 0.3, "l2": 1.0},
                        seed=seed, name="xgboost-style"),
    ]
