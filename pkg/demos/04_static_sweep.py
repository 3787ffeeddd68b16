"""Per-distance training: how accuracy tracks the reference maximum as the
node pair moves through the transitional region."""

from __future__ import annotations

from lqlab.dataset import TWO_CLASS
from lqlab.experiments import ExperimentConfig, _rng, static_sweep_rows

# a lighter learner than the default MLP keeps this demo quick
cfg = ExperimentConfig.from_dict({
    "focus_predictor": {TWO_CLASS: {"kind": "decision-tree", "hyperparameters": {"max_depth": 6}}},
    "static_sweep": {"samples_per_d": 3000},
})
factors = [0.2, 0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.5, 2.2]
rows = static_sweep_rows(cfg, TWO_CLASS, factors, _rng(cfg, 4))

print(" d/r0    ACC    Acc_max   U_p      U")
for _, f, acc, acc_max, u_p, u in rows:
    print(f" {f:4.2f}  {acc:.4f}  {acc_max:.4f}  {u_p:.4f}  {u:.4f}")
# near r0 the labels are coin flips, so no learner does much better than 0.5
