from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqlab.channel import ChannelParams
from lqlab.dataset import (FOUR_CLASS, TWO_CLASS, BeaconTrace, EnvDescriptor, SampleSet, assemble,
                           generate_trace, split, uniform_bins)
from lqlab.filter import (U_TH, default_grid, effective_rate_sweep, gate_predictions,
                          gate_trace, interval_measure, peak_randomness_location,
                          threshold_intervals)
from lqlab.predictors import PRIOR, TREE, PredictorConfig, train


def constant_model(label, scheme=TWO_CLASS, K=10):
    n = 4
    X = np.tile(np.array([1.0, -60.0] * K), (n, 1))
    env = (EnvDescriptor(0, 1.0, 1.0, (1.0,), (n,)),)
    s = SampleSet(X, np.full(n, label), np.zeros(n, dtype=np.int64), np.ones(n), env, scheme, K)
    return train(PredictorConfig(PRIOR), s)


@pytest.fixture(scope="module")
def tree_model():
    p = ChannelParams()
    s = assemble(uniform_bins(p.r0, count=60), TWO_CLASS, 10, p, np.random.default_rng(2),
                 pairs_per_env=5)
    tr, _ = split(s, 0.7, np.random.default_rng(3))
    return train(PredictorConfig(TREE, {"max_depth": 6}), tr)


def test_constant_lost_discards_everything(params, rng):
    g = gate_trace(generate_trace(0.5 * params.r0, 300, params, rng), constant_model(0))
    assert not g.effective.any()
    assert g.rate_after == 0.0


def test_constant_received_keeps_raw(params, rng):
    tr = generate_trace(params.r0, 300, params, rng)
    g = gate_trace(tr, constant_model(1))
    np.testing.assert_array_equal(g.effective, g.raw)
    np.testing.assert_array_equal(g.raw, tr.received[10:])


def test_oracle_gate_keeps_raw(params, rng):
    raw = generate_trace(params.r0, 10_000, params, rng).received
    eff = gate_predictions(raw, raw.astype(np.int64))
    np.testing.assert_array_equal(eff, raw)
    assert eff.mean() == pytest.approx(0.5, abs=0.02)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=50), st.data())
def test_gating_rule(raw, data):
    raw = np.array(raw)
    pred = np.array(data.draw(st.lists(st.integers(0, 1), min_size=len(raw), max_size=len(raw))))
    eff = gate_predictions(raw, pred)
    np.testing.assert_array_equal(eff, raw & (pred == 1))
    assert np.all(eff <= raw)


def test_gate_trace_uses_preceding_window(tree_model, params, rng):
    tr = generate_trace(params.r0, 60, params, rng)
    g = gate_trace(tr, tree_model)
    from lqlab.predictors import predict
    from lqlab.dataset import window_features
    assert len(g.raw) == 50
    np.testing.assert_array_equal(g.predicted, predict(tree_model, window_features(tr, 10, 50)))


def test_gate_trace_errors(params, rng):
    with pytest.raises(ValueError):
        gate_trace(generate_trace(500.0, 50, params, rng), constant_model(0, FOUR_CLASS))
    with pytest.raises(ValueError):
        gate_trace(BeaconTrace.from_pattern("R" * 10), constant_model(1))
    with pytest.raises(ValueError):
        gate_trace(generate_trace(500.0, 50, params, rng), constant_model(1), K=5)


def test_threshold_intervals_interpolate():
    d = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    u = np.array([0.0, 1.0, 1.0, 0.0, 0.0])
    assert threshold_intervals(d, u, 0.5) == [(0.5, 2.5)]
    assert interval_measure([(0.5, 2.5), (3.0, 3.5)]) == pytest.approx(2.5)
    assert threshold_intervals(d, np.zeros(5)) == []
    assert threshold_intervals(d, np.ones(5)) == [(0.0, 4.0)]


def test_default_grid(params):
    g = default_grid(params.r0)
    assert len(g) == 100 and g[0] > 0 and g[-1] == pytest.approx(2.5 * params.r0)


def test_sweep_rate_after_never_exceeds_before(tree_model, params):
    grid = default_grid(params.r0, 25)
    rep = effective_rate_sweep(tree_model, grid, 2000, params, np.random.default_rng(4))
    assert np.all(rep.rate_after <= rep.rate_before)
    assert rep.rate_before[0] == pytest.approx(1.0, abs=0.01)
    assert rep.rate_after[0] == pytest.approx(1.0, abs=0.02)
    k = int(np.argmin(np.abs(grid - 1.2 * params.r0)))
    assert rep.rate_after[k] < 0.1
    assert peak_randomness_location(rep, "analytic") == pytest.approx(params.r0, abs=grid[1] - grid[0])


def test_sweep_rejects_bad_grid(tree_model, params, rng):
    with pytest.raises(ValueError):
        effective_rate_sweep(tree_model, [0.0, 100.0], 10, params, rng)
    with pytest.raises(ValueError):
        effective_rate_sweep(tree_model, [3 * params.r0], 10, params, rng)


def test_peak_tie_goes_to_smallest_distance():
    p = ChannelParams(sigma=0.0)
    grid = default_grid(p.r0, 20)
    grid = grid[np.abs(grid - p.r0) > 1e-6]
    rep = effective_rate_sweep(constant_model(1), grid, 50, p, np.random.default_rng(0))
    assert np.all(rep.U_before == 0)
    assert peak_randomness_location(rep, "before") == grid.min()
    assert peak_randomness_location(rep, "after") == grid.min()
    with pytest.raises(ValueError):
        rep.curve("sideways")


def test_u_th_default():
    assert U_TH == 0.5
