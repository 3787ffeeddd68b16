"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines appear at
the end of the report. Each test asserts the full criterion at its stated
tolerance.
"""

from __future__ import annotations

import csv
import json
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

from conftest import ACCEPTANCE
from lqlab import cli
from lqlab.channel import ChannelParams, delivery_rate, distance_for_rate, draw_links
from lqlab.dataset import FOUR_CLASS, SCHEMES, TWO_CLASS, assemble, generate_trace
from lqlab.experiments import (COMMANDS, ExperimentConfig, _rng, cmd_randomness_curve,
                               filter_report, interval_measure, peak_randomness_location,
                               static_sweep_rows, table_reports)
from lqlab.filter import gate_trace
from lqlab.metrics import analytic_mislabel, empirical_mislabel
from lqlab.predictors import TREE, mlp

from small_config import SMALL

N_SEEDS = 10


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def test_criterion_1_analytic_channel():
    t0 = time.perf_counter()
    p = ChannelParams()
    at_r0 = abs(delivery_rate(p.r0, p) - 0.5)
    n = 100_000
    d = p.r0 * np.linspace(0.125, 2.5, 20)
    _, _, rec = draw_links(d, n, p, np.random.default_rng(2024))
    freq = rec.mean(axis=1)
    prob = delivery_rate(d, p)
    bound = 3 * np.sqrt(prob * (1 - prob) / n)
    inside = np.abs(freq - prob) <= bound
    elapsed = time.perf_counter() - t0
    ok = at_r0 < 1e-9 and inside.all() and elapsed < 10
    record(1, ok, f"|p(r0)-0.5|={at_r0:.1e}; {inside.sum()}/20 within 3 sigma; {elapsed:.2f}s")
    assert at_r0 < 1e-9
    assert inside.all(), d[~inside]
    assert elapsed < 10


def test_criterion_2_randomness_curve(tmp_path):
    mpmath.mp.dps = 50
    oracle = -mpmath.fsum(w * mpmath.log(w, 2) for w in
                          (mpmath.mpf(1) / 8, mpmath.mpf(3) / 8, mpmath.mpf(3) / 8, mpmath.mpf(1) / 8))
    cfg = ExperimentConfig.from_dict({"out": str(tmp_path)})
    assert cfg["randomness"]["samples_per_point"] == 10_000
    cmd_randomness_curve(cfg)
    with open(tmp_path / "randomness" / "randomness_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    d = np.array([float(r["d"]) for r in rows])
    r0 = cfg.params.r0
    checks, notes = [], []
    for scheme, peak in ((TWO_CLASS, 1.0), (FOUR_CLASS, float(oracle))):
        a = np.array([float(r[f"U_{scheme}_analytic"]) for r in rows])
        e = np.array([float(r[f"U_{scheme}_empirical"]) for r in rows])
        k = int(np.argmax(a))
        at_r0 = d[k] == r0
        if scheme == TWO_CLASS:
            value_ok = a[k] == 1.0
        else:
            value_ok = abs(a[k] - peak) < 1e-6
        dev = float(np.max(np.abs(a - e)))
        checks += [at_r0, value_ok, dev <= 0.03]
        notes.append(f"{scheme}: peak {a[k]:.7f} at d/r0={d[k] / r0:g}, max |emp-ana|={dev:.4f}")
    record(2, all(checks), "; ".join(notes))
    assert all(checks), notes


def test_criterion_3_mislabel_convergence():
    p = ChannelParams()
    rng = np.random.default_rng(33)
    worst = 0.0
    for target in (0.1, 0.5, 0.9):
        d = distance_for_rate(target, p)
        assert delivery_rate(d, p) == pytest.approx(target, abs=1e-12)
        for scheme, child in zip(SCHEMES, rng.spawn(2)):
            s = assemble([(d, 100_000)], scheme, 10, p, child)
            diff = np.abs(empirical_mislabel(s.labels, scheme).rows
                          - analytic_mislabel(d, p, scheme).rows)
            worst = max(worst, float(diff.max()))
    ok = worst <= 0.02
    record(3, ok, f"max entry deviation {worst:.4f} over p in (0.1, 0.5, 0.9), both schemes")
    assert ok


def test_criterion_4_table_properties(tmp_path):
    t0 = time.perf_counter()
    viol_a, viol_b = [], []
    dt_top = {s: 0 for s in SCHEMES}
    for seed in range(N_SEEDS):
        cfg = ExperimentConfig.from_dict({"seed": seed, "out": str(tmp_path)})
        rng = _rng(cfg, 3)
        for scheme, child in zip(cfg["schemes"], rng.spawn(len(cfg["schemes"]))):
            reps, _ = table_reports(cfg, scheme, child)
            assert len(reps) == 5
            for r in reps:
                if not r.acc <= r.acc_max + 0.02:
                    viol_a.append((seed, scheme, r.name, r.acc, r.acc_max))
                if not r.u_p >= r.U - 0.02:
                    viol_b.append((seed, scheme, r.name, r.u_p, r.U))
            dt = [r.u_p for r in reps if r.extra["kind"] == TREE]
            others = [r.u_p for r in reps if r.extra["kind"] != TREE]
            dt_top[scheme] += dt[0] > max(others)
    elapsed = time.perf_counter() - t0
    ok = not viol_a and not viol_b and all(v >= 8 for v in dt_top.values()) and elapsed < 300
    record(4, ok, f"(a) {len(viol_a)} violations, (b) {len(viol_b)} violations, (c) DT top U_p "
                  f"{dt_top[TWO_CLASS]}/10 two-class, {dt_top[FOUR_CLASS]}/10 four-class; "
                  f"{elapsed:.0f}s")
    assert not viol_a, viol_a
    assert not viol_b, viol_b
    assert all(v >= 8 for v in dt_top.values()), dt_top
    assert elapsed < 300


def test_criterion_5_static_sweep(tmp_path):
    cfg = ExperimentConfig.from_dict({"out": str(tmp_path)})
    extremes = [f for f in cfg["static_sweep"]["d_factors"] if f <= 0.2 or f >= 2.0]
    rng = _rng(cfg, 4)
    failures, rows_seen = [], 0
    for scheme, child in zip(SCHEMES, rng.spawn(2)):
        for d, f, acc, acc_max, _, _ in static_sweep_rows(cfg, scheme, extremes, child):
            rows_seen += 1
            if not (acc >= 0.97 and acc >= acc_max - 0.03):
                failures.append(f"{scheme} d={f:g}r0 ACC={acc:.4f} Acc_max={acc_max:.4f}")
    (_, _, mid_acc, _, _, _), = static_sweep_rows(cfg, TWO_CLASS, [1.0], _rng(cfg, 4, 1))
    mid_ok = 0.45 <= mid_acc <= 0.55
    if not mid_ok:
        failures.append(f"two-class d=r0 ACC={mid_acc:.4f}")
    ok = not failures
    record(5, ok, f"{rows_seen} extreme-distance rows, two-class ACC at r0 = {mid_acc:.4f}"
                  + (f"; failing: {', '.join(failures)}" if failures else ""))
    assert ok, failures


def test_criterion_6_filter(tmp_path):
    shrink = peak_below = 0
    dominated = True
    notes = []
    for seed in range(N_SEEDS):
        cfg = ExperimentConfig.from_dict({"seed": seed, "out": str(tmp_path)})
        p = cfg.params
        model, rep, tl_rng = filter_report(cfg)
        dominated &= bool(np.all(rep.rate_after <= rep.rate_before))
        for f, g in zip((0.8, 1.0, 1.2), tl_rng.spawn(3)):
            gt = gate_trace(generate_trace(f * p.r0, 2000, p, g), model)
            dominated &= bool(np.all(gt.effective <= gt.raw))
        wb, wa = interval_measure(rep.unstable_before), interval_measure(rep.unstable_after)
        pk = peak_randomness_location(rep, "after")
        shrink += wa < wb
        peak_below += pk < p.r0
        notes.append(f"{wb / p.r0:.2f}->{wa / p.r0:.2f}@{pk / p.r0:.2f}")
    ok = dominated and shrink >= 8 and peak_below >= 8
    record(6, ok, f"(a) domination {'exact' if dominated else 'VIOLATED'}, (b) shrinks in "
                  f"{shrink}/10, (c) after-peak < r0 in {peak_below}/10 "
                  f"[width before->after @ peak, r0 units: {' '.join(notes)}]")
    assert dominated
    assert shrink >= 8
    assert peak_below >= 8


def test_criterion_7_gradient_check(monkeypatch):
    rng = np.random.default_rng(7)
    errs = []
    for m in (2, 4):
        for _ in range(5):
            params = mlp.init_params(20, 16, m, rng)
            X = rng.normal(size=(mlp.GRAD_CHECK_SAMPLES, 20))
            Y = np.eye(m)[rng.integers(0, m, size=mlp.GRAD_CHECK_SAMPLES)]
            errs.append(mlp.gradient_check(params, X, Y))
    worst = max(errs)

    # training must refuse to start when backprop is wrong
    good = mlp.loss_and_grad

    def skewed(params, X, Y):
        value, grads = good(params, X, Y)
        return value, {k: (v * 1.001 if k == "b2" else v) for k, v in grads.items()}

    monkeypatch.setattr(mlp, "loss_and_grad", skewed)
    X = rng.normal(size=(30, 20))
    y = rng.integers(0, 2, size=30)
    hp = {"hidden": 16, "epochs": 1, "learning_rate": 0.05, "batch_size": 32}
    try:
        mlp.fit(X, y, 2, hp, rng)
        gated = False
    except mlp.GradientCheckError:
        gated = True
    ok = worst <= 1e-4 and gated
    record(7, ok, f"worst relative error {worst:.2e} over 10 probes; broken gradient "
                  f"{'blocks' if gated else 'does NOT block'} training")
    assert worst <= 1e-4
    assert gated


def _run_cli(cfg_path, out, *args):
    cmd = [sys.executable, "-m", "lqlab.cli", "--config", str(cfg_path), "--out", str(out), *args]
    return subprocess.run(cmd, capture_output=True, text=True)


def _csv_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_criterion_8_reproducibility(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    invocations = [[c] for c in sorted(COMMANDS)] + [
        ["dataset", "build", "--scheme", TWO_CLASS],
        ["dataset", "build", "--scheme", FOUR_CLASS],
        ["model", "train", "--scheme", FOUR_CLASS],
    ]
    snaps = []
    for out in (tmp_path / "run1", tmp_path / "run2"):
        for args in invocations:
            res = _run_cli(cfg_path, out, *args)
            assert res.returncode == 0, res.stderr
        snaps.append(_csv_bytes(out))
    # the default configuration, for the commands that are quick at full size
    full = tmp_path / "full.json"
    full.write_text("{}")
    for out in (tmp_path / "full1", tmp_path / "full2"):
        for c in ("channel", "randomness"):
            assert cli.main(["--config", str(full), "--out", str(out), c]) == 0
    same_full = _csv_bytes(tmp_path / "full1") == _csv_bytes(tmp_path / "full2")
    same = snaps[0] == snaps[1] and len(snaps[0]) > 0
    ok = same and same_full
    record(8, ok, f"{len(snaps[0])} CSV files from {len(invocations)} invocations, plus "
                  f"{len(_csv_bytes(tmp_path / 'full1'))} at full size, "
                  f"{'byte-identical' if ok else 'DIFFER'} across reruns")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
