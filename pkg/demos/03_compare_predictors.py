"""Train the five comparison learners on a spread-distance dataset (distances
spread over (0, 2.5 r0)) and print the comparison table for each scheme."""

from __future__ import annotations

import numpy as np

from lqlab.channel import ChannelParams
from lqlab.dataset import SCHEMES, assemble, split, uniform_bins
from lqlab.predictors import compare_models, comparison_configs

params = ChannelParams()
rng = np.random.default_rng(2)

for scheme in SCHEMES:
    # 50 distance bins, 100 windows each, spread over 5 node pairs per bin
    sset = assemble(uniform_bins(params.r0), scheme, 10, params, rng, pairs_per_env=5)
    train_set, test_set = split(sset, 0.7, rng)
    reports = compare_models(comparison_configs(seed=0), train_set, test_set)
    print(f"\n{scheme}: {len(train_set)} train / {len(test_set)} test windows")
    print(f" {'model':<16}{'ACC':>8}{'Acc_max':>9}{'U_p':>8}{'U':>8}")
    for r in reports:
        print(f" {r.name:<16}{r.acc:8.4f}{r.acc_max:9.4f}{r.u_p:8.4f}{r.U:8.4f}")
