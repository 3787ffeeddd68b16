from .core import (
    DEFAULTS,
    FOREST,
    GBDT,
    KIND_ORDER,
    MLP,
    PRIOR,
    TREE,
    PredictorConfig,
    TrainedModel,
    compare_models,
    evaluate,
    load_model,
    model_from_json,
    model_to_json,
    comparison_configs,
    predict,
    predict_scores,
    save_model,
    train,
)
from .mlp import GradientCheckError

__all__ = [
    "DEFAULTS", "FOREST", "GBDT", "KIND_ORDER", "MLP", "PRIOR", "TREE",
    "PredictorConfig", "TrainedModel", "GradientCheckError",
    "compare_models", "evaluate", "load_model", "model_from_json", "model_to_json",
    "comparison_configs", "predict", "predict_scores", "save_model", "train",
]
