"""Walk through the shadowing channel: path loss, the delivery-rate curve
and how Monte Carlo draws line up with it."""

from __future__ import annotations

import numpy as np

from lqlab.channel import ChannelParams, delivery_rate, distance_for_rate, draw_links

params = ChannelParams()  # alpha=3, sigma=4 dB, 50 mW, 90 dB threshold
r0 = params.r0
print(f"r0 = {r0:.1f} m, transmit power {params.pt_dbm:.4f} dBm")

# closed form against simulation at a few distances
rng = np.random.default_rng(0)
factors = np.array([0.25, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5])
_, rssi, rec = draw_links(factors * r0, 20_000, params, rng)
print("\n d/r0   p(d)     simulated   mean RSSI of received (dBm)")
for f, p, r, s in zip(factors, delivery_rate(factors * r0, params), rec, rssi):
    mean_rssi = s[r].mean() if r.any() else float("nan")
    print(f" {f:4.2f}  {p:.5f}   {r.mean():.5f}     {mean_rssi:7.2f}")

# the distances where the link is 90%, 50% and 10% reliable
for target in (0.9, 0.5, 0.1):
    print(f"p(d) = {target}: d = {distance_for_rate(target, params) / r0:.3f} r0")

# a smaller sigma sharpens the transition around r0
for sigma in (2.0, 4.0, 8.0):
    p = ChannelParams(sigma=sigma)
    lo, hi = distance_for_rate(0.9, p), distance_for_rate(0.1, p)
    print(f"sigma={sigma:>3} dB: 90%..10% band spans {lo / r0:.2f}..{hi / r0:.2f} r0")
