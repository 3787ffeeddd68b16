"""Prediction-gated reception.

A receiver hands a packet to the upper layer only when the two-class
predictor, fed the previous K beacon cycles, forecast ``Received`` for
that cycle. Packets arriving against a ``Lost`` forecast are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, delivery_rate
from .dataset import RECEIVED, TWO_CLASS, BeaconTrace, generate_trace, window_features
from .metrics import binary_entropy
from .predictors import TrainedModel, predict

U_TH = 0.5


@dataclass(frozen=True)
class GatedTrace:
    """Per-cycle record from cycle ``K`` onward (earlier cycles only seed the window)."""

    distance: float
    raw: np.ndarray
    predicted: np.ndarray
    effective: np.ndarray

    @property
    def rate_before(self) -> float:
        return float(self.raw.mean())

    @property
    def rate_after(self) -> float:
        return float(self.effective.mean())


@dataclass(frozen=True)
class RegionReport:
    d_grid: np.ndarray
    rate_before: np.ndarray
    rate_after: np.ndarray
    U_before: np.ndarray
    U_after: np.ndarray
    unstable_before: list[tuple[float, float]]
    unstable_after: list[tuple[float, float]]
    rate_analytic: np.ndarray
    U_analytic: np.ndarray
    u_th: float = U_TH

    def curve(self, which: str) -> np.ndarray:
        try:
            return {"before": self.U_before, "after": self.U_after,
                    "analytic": self.U_analytic}[which]
        except KeyError:
            raise ValueError(f"unknown curve {which!r}") from None


def gate_predictions(raw: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    return raw & (predicted == RECEIVED)


def gate_trace(trace: BeaconTrace, model: TrainedModel, K: int | None = None) -> GatedTrace:
    if model.scheme != TWO_CLASS:
        raise ValueError("gating needs a two-class model")
    K = model.K if K is None else K
    if K != model.K:
        raise ValueError(f"model was trained on K={model.K}, got K={K}")
    n = len(trace) - K
    if n < 1:
        raise ValueError("trace must be longer than K cycles")
    predicted = predict(model, window_features(trace, K, n))
    raw = trace.received[K:].copy()
    return GatedTrace(trace.distance, raw, predicted, gate_predictions(raw, predicted))


def default_grid(r0: float, n: int = 100, lo: float = 0.02, hi: float = 2.5) -> np.ndarray:
    """``n`` evenly spaced distances in ``(lo*r0, hi*r0]``."""
    return r0 * np.linspace(lo, hi, n + 1)[1:]


def threshold_intervals(d: np.ndarray, u: np.ndarray, u_th: float = U_TH) -> list[tuple[float, float]]:
    """Maximal intervals where ``u >= u_th``, crossings placed by linear
    interpolation between neighbouring grid points."""
    d = np.asarray(d, dtype=float)
    u = np.asarray(u, dtype=float)
    above = u >= u_th
    out = []
    i, n = 0, len(d)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        start = d[i] if i == 0 else _cross(d[i - 1], d[i], u[i - 1], u[i], u_th)
        end = d[j] if j == n - 1 else _cross(d[j], d[j + 1], u[j], u[j + 1], u_th)
        out.append((float(start), float(end)))
        i = j + 1
    return out


def _cross(d0, d1, u0, u1, u_th):
    if u1 == u0:
        return d0
    return d0 + (u_th - u0) * (d1 - d0) / (u1 - u0)


def interval_measure(intervals) -> float:
    return float(sum(b - a for a, b in intervals))


def effective_rate_sweep(model: TrainedModel, d_grid, cycles_per_d: int,
                         params: ChannelParams, rng: np.random.Generator,
                         u_th: float = U_TH) -> RegionReport:
    """Monte Carlo delivery rate and randomness with and without the gate.

    Every grid point gets a fresh trace from its own child stream. The
    before and after rates come from the same draws, so ``rate_after`` can
    never exceed ``rate_before``. Randomness at one distance is the binary
    entropy of the corresponding reception rate.
    """
    d_grid = np.asarray(d_grid, dtype=float)
    if d_grid.size == 0 or np.any(d_grid <= 0) or np.any(d_grid > 2.5 * params.r0 * (1 + 1e-12)):
        raise ValueError("grid must lie within (0, 2.5*r0]")
    before = np.empty(len(d_grid))
    after = np.empty(len(d_grid))
    for i, (d, child) in enumerate(zip(d_grid, rng.spawn(len(d_grid)))):
        trace = generate_trace(d, cycles_per_d + model.K, params, child)
        g = gate_trace(trace, model)
        before[i] = g.rate_before
        after[i] = g.rate_after
    u_before = binary_entropy(before)
    u_after = binary_entropy(after)
    analytic = np.asarray(delivery_rate(d_grid, params), dtype=float)
    return RegionReport(d_grid, before, after, u_before, u_after,
                        threshold_intervals(d_grid, u_before, u_th),
                        threshold_intervals(d_grid, u_after, u_th),
                        analytic, binary_entropy(analytic), u_th)


def peak_randomness_location(report: RegionReport, which: str = "after") -> float:
    """Grid distance of the largest randomness; ties go to the smaller distance."""
    u = report.curve(which)
    order = np.argsort(report.d_grid, kind="stable")
    k = int(np.argmax(u[order]))
    return float(report.d_grid[order][k])
