"""Label randomness of single-distance sample sets, analytic and empirical,
for both label schemes."""

from __future__ import annotations

import numpy as np

from lqlab.channel import ChannelParams, delivery_rate
from lqlab.dataset import FOUR_CLASS, TWO_CLASS, assemble, label_lookahead
from lqlab.metrics import (analytic_mislabel, empirical_mislabel, label_entropy,
                           set_randomness)

params = ChannelParams()
r0 = params.r0
rng = np.random.default_rng(1)

print(" d/r0   p(d)    U two-class (ana / emp)   U four-class (ana / emp)")
for f in (0.3, 0.6, 0.9, 1.0, 1.1, 1.4, 2.0):
    d = f * r0
    cells = []
    for scheme in (TWO_CLASS, FOUR_CLASS):
        # label-disjoint windows keep the empirical labels independent
        s = assemble([(d, 5000)], scheme, 10, params, rng, stride=label_lookahead(scheme))
        ana = set_randomness(s, "analytic").U
        emp = set_randomness(s, "empirical").U
        cells.append(f"{ana:.4f} / {emp:.4f}")
    print(f" {f:4.2f}  {delivery_rate(d, params):.4f}  {cells[0]:>22}   {cells[1]:>22}")

# at r0 every row of the four-class matrix is Binomial(3, 1/2)
m = analytic_mislabel(r0, params, FOUR_CLASS)
print("\nfour-class mislabel row at r0:", np.round(m.rows[0], 4),
      f"entropy {label_entropy(m.rows[0]):.6f} bits")

s = assemble([(r0, 20_000)], FOUR_CLASS, 10, params, rng)
print("empirical row from 20000 windows:", np.round(empirical_mislabel(s.labels, FOUR_CLASS).rows[0], 4))
