"""A scaled-down experiment config so every command runs in seconds."""

SMALL = {
    "seed": 11,
    "dataset": {"samples_per_env": 16, "pairs_per_env": 2},
    "predictors": [
        {"kind": "prior-baseline"},
        {"kind": "decision-tree", "hyperparameters": {"max_depth": 4}},
        {"kind": "mlp", "hyperparameters": {"epochs": 3}},
        {"kind": "gbdt", "hyperparameters": {"n_rounds": 5}},
    ],
    "focus_predictor": {
        "two-class": {"kind": "decision-tree", "hyperparameters": {"max_depth": 5}},
        "four-class": {"kind": "gbdt", "hyperparameters": {"n_rounds": 5}},
    },
    "channel_curves": {"n_points": 20, "mc_cycles": 200, "scatter_points": 10,
                       "scatter_draws": 3, "time_cycles": 30},
    "randomness": {"n_points": 10, "samples_per_point": 200},
    "static_sweep": {"d_factors": [0.2, 1.0, 2.2], "samples_per_d": 200},
    "dynamic_sweep": {"widths": [0.1, 0.3], "samples_per_set": 300},
    "filter": {"n_grid": 10, "cycles_per_d": 200, "timeline_cycles": 30},
}
