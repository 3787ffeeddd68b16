"""Gate packet processing on a two-class forecast and see how the delivery
rate and its randomness shift with distance."""

from __future__ import annotations

import numpy as np

from lqlab.channel import ChannelParams
from lqlab.dataset import TWO_CLASS, assemble, generate_trace, split, uniform_bins
from lqlab.filter import default_grid, effective_rate_sweep, gate_trace, peak_randomness_location
from lqlab.predictors import PredictorConfig, train

params = ChannelParams()
r0 = params.r0
rng = np.random.default_rng(3)

sset = assemble(uniform_bins(r0), TWO_CLASS, 10, params, rng, pairs_per_env=5)
train_set, _ = split(sset, 0.7, rng)
model = train(PredictorConfig("mlp", {"epochs": 60}), train_set)

# one short timeline per distance: raw receptions and what survives the gate
for f in (0.8, 1.0, 1.2):
    g = gate_trace(generate_trace(f * r0, 60, params, rng), model)
    raw = "".join("R" if x else "." for x in g.raw)
    eff = "".join("R" if x else "." for x in g.effective)
    print(f"d={f:.1f} r0  raw {raw}\n           kept {eff}")

rep = effective_rate_sweep(model, default_grid(r0, 50), 4000, params, rng)
print("\n d/r0  before  after   U_before U_after")
for d, b, a, ub, ua in list(zip(rep.d_grid, rep.rate_before, rep.rate_after,
                                rep.U_before, rep.U_after))[10:35:2]:
    print(f" {d / r0:4.2f}  {b:.3f}   {a:.3f}   {ub:.3f}    {ua:.3f}")

w = lambda ivs: sum(b - a for a, b in ivs) / r0
print(f"\nunstable width (U >= {rep.u_th}): {w(rep.unstable_before):.2f} r0 before, "
      f"{w(rep.unstable_after):.2f} r0 after")
print(f"peak randomness after gating at {peak_randomness_location(rep) / r0:.2f} r0")
