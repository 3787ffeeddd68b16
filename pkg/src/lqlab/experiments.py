"""Config-driven experiments that write their results as CSV files.

Each ``cmd_*`` function takes an :class:`ExperimentConfig`, writes into
``<out>/<command>/`` and returns the list of files it wrote. Every command
directory also receives ``config.json`` (the resolved config) and
``manifest.json`` (artifact name -> command and seed). Output depends only
on the config, so re-running a command rewrites identical bytes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .channel import ChannelParams, delivery_rate, draw_links
from .dataset import (FOUR_CLASS, SCHEMES, TWO_CLASS, assemble, atomic_write_text,
                      generate_trace, label_lookahead, split, uniform_bins)
from .filter import (default_grid, effective_rate_sweep, gate_trace, interval_measure,
                     peak_randomness_location)
from .predictors import (GBDT, MLP, PredictorConfig, compare_models, evaluate,
                         comparison_configs, train)


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG: dict = {
    "seed": 0,
    "out": "out",
    "channel": ChannelParams().to_dict(),
    "K": 10,
    "schemes": [TWO_CLASS, FOUR_CLASS],
    "mislabel_source": metrics.ANALYTIC,
    "train_fraction": 0.7,
    "dataset": {
        "d_lo": 0.0,
        "d_hi": 2.5,
        "bin_width": 0.05,
        "samples_per_env": 100,
        "pairs_per_env": 5,
        "sentinel_dbm": -110.0,
    },
    # None -> the five-row comparison (NN, RF, DT, GBDT, XGBoost-style)
    "predictors": None,
    # learner used where a single model is needed, per scheme
    "focus_predictor": {
        TWO_CLASS: {"kind": MLP},
        FOUR_CLASS: {"kind": GBDT},
    },
    "channel_curves": {
        "n_points": 125,
        "d_max": 2.5,
        "mc_cycles": 10000,
        "scatter_points": 100,
        "scatter_draws": 20,
        "time_cycles": 200,
    },
    "randomness": {"n_points": 100, "d_max": 2.5, "samples_per_point": 10000},
    "static_sweep": {
        "d_factors": [round(0.1 * i, 1) for i in range(1, 26)],
        "samples_per_d": 5000,
    },
    "dynamic_sweep": {
        "d_lo": 0.5,
        "d_hi": 1.5,
        "bin_width": 0.05,
        "widths": [round(0.05 * i, 2) for i in range(1, 11)],
        "samples_per_set": 5000,
    },
    "filter": {
        "n_grid": 100,
        "cycles_per_d": 10000,
        "u_th": 0.5,
        "timeline_factors": [0.8, 1.0, 1.2],
        "timeline_cycles": 200,
    },
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        # predictor specs are replaced whole; their keys are checked by PredictorConfig
        if isinstance(base[k], dict) and isinstance(v, dict) and path != "focus_predictor.":
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """Resolved experiment settings; see :data:`DEFAULT_CONFIG` for keys."""

    values: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))

    @classmethod
    def from_dict(cls, d: dict | None = None) -> "ExperimentConfig":
        cfg = cls(_merge(DEFAULT_CONFIG, d or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        vals = copy.deepcopy(self.values)
        for k, v in kw.items():
            if v is not None:
                vals[k] = v
        cfg = ExperimentConfig(vals)
        cfg.validate()
        return cfg

    @property
    def params(self) -> ChannelParams:
        return ChannelParams.from_dict(self.values["channel"])

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        try:
            self.params
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"channel: {exc}") from exc
        for s in v["schemes"]:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")
        if not (isinstance(v["K"], int) and v["K"] >= 1):
            raise ConfigError("K must be a positive integer")
        if not 0 < v["train_fraction"] < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if v["mislabel_source"] not in (metrics.ANALYTIC, metrics.EMPIRICAL):
            raise ConfigError("mislabel_source must be 'analytic' or 'empirical'")
        if not isinstance(v["seed"], int):
            raise ConfigError("seed must be an integer")
        try:
            self.predictor_configs()
            for s in SCHEMES:
                self.focus_config(s)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"predictor config: {exc}") from exc

    def predictor_configs(self) -> list[PredictorConfig]:
        seed = self.values["seed"]
        if self.values["predictors"] is None:
            return comparison_configs(seed)
        return [PredictorConfig.from_dict({"seed": seed, **d}) for d in self.values["predictors"]]

    def focus_config(self, scheme: str) -> PredictorConfig:
        return PredictorConfig.from_dict({"seed": self.values["seed"],
                                          **self.values["focus_predictor"][scheme]})

    def to_json(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True) + "\n"


# --- output helpers --------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(_cell(c) for c in row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


class _Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = Path(cfg["out"]) / command
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def csv(self, name: str, header, rows) -> Path:
        p = write_csv(self.dir / name, header, rows)
        self.files.append(p)
        return p

    def text(self, name: str, text: str) -> Path:
        p = self.dir / name
        atomic_write_text(p, text)
        self.files.append(p)
        return p

    def finish(self) -> list[Path]:
        cfg_path = self.dir / "config.json"
        atomic_write_text(cfg_path, self.cfg.to_json())
        man_path = self.dir / "manifest.json"
        artifacts = {}
        if man_path.exists():
            artifacts = json.loads(man_path.read_text()).get("artifacts", {})
        artifacts.update({p.name: {"command": self.command, "seed": self.cfg["seed"]}
                          for p in self.files})
        manifest = {"command": self.command, "artifacts": artifacts}
        atomic_write_text(man_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return self.files + [cfg_path, man_path]


def _rng(cfg: ExperimentConfig, *tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg["seed"], *tag]))


def spread_set(cfg: ExperimentConfig, scheme: str, rng: np.random.Generator):
    """Node pairs spread uniformly over ``(d_lo, d_hi) * r0`` in equal-width bins."""
    ds = cfg["dataset"]
    r0 = cfg.params.r0
    entries = uniform_bins(r0, ds["d_lo"], ds["d_hi"], ds["bin_width"], ds["samples_per_env"])
    return assemble(entries, scheme, cfg["K"], cfg.params, rng,
                    pairs_per_env=ds["pairs_per_env"], sentinel_dbm=ds["sentinel_dbm"])


REPORT_HEADER = ["model", "kind", "ACC", "Acc_max", "U_p", "U", "A"]


def _report_row(rep: metrics.PredictionReport) -> list:
    return [rep.name, rep.extra.get("kind", ""), rep.acc, rep.acc_max, rep.u_p, rep.U,
            rep.extra.get("A", float("nan"))] + rep.confusion.ravel().tolist()


# --- commands --------------------------------------------------------------

def cmd_channel_curves(cfg: ExperimentConfig) -> list[Path]:
    run = _Run(cfg, "channel")
    c = cfg["channel_curves"]
    p = cfg.params
    r0 = p.r0
    rng = _rng(cfg, 1)
    mc_rng, scatter_rng, time_rng = rng.spawn(3)

    d = r0 * np.linspace(0.0, c["d_max"], c["n_points"] + 1)[1:]
    if not np.any(np.isclose(d, r0)):
        d = np.sort(np.append(d, r0))
    d[np.isclose(d, r0)] = r0
    analytic = delivery_rate(d, p)
    _, _, rec = draw_links(d, c["mc_cycles"], p, mc_rng)
    run.csv("delivery_rate.csv", ["d", "d_over_r0", "p_analytic", "p_monte_carlo"],
            zip(d, d / r0, analytic, rec.mean(axis=1)))

    ds = r0 * np.linspace(0.0, c["d_max"], c["scatter_points"] + 1)[1:]
    beta, rssi, rec = draw_links(ds, c["scatter_draws"], p, scatter_rng)
    rows = [(dd, b, r, ok) for dd, bb, rr, kk in zip(ds, beta, rssi, rec)
            for b, r, ok in zip(bb, rr, kk)]
    run.csv("rssi_vs_distance.csv", ["d", "beta_db", "rssi_dbm", "received"], rows)
    run.csv("reception_vs_distance.csv", ["d", "received"], [(r[0], r[3]) for r in rows])

    beta, rssi, rec = draw_links(r0, c["time_cycles"], p, time_rng)
    run.csv("rssi_vs_time.csv", ["cycle", "beta_db", "rssi_dbm", "received"],
            zip(range(c["time_cycles"]), beta, rssi, rec))
    return run.finish()


def _single_distance_set(cfg, scheme, d, count, rng, stride=1):
    ds = cfg["dataset"]
    return assemble([(d, count)], scheme, cfg["K"], cfg.params, rng,
                    sentinel_dbm=ds["sentinel_dbm"], stride=stride)


def cmd_randomness_curve(cfg: ExperimentConfig) -> list[Path]:
    run = _Run(cfg, "randomness")
    c = cfg["randomness"]
    p = cfg.params
    r0 = p.r0
    d = r0 * np.linspace(0.0, c["d_max"], c["n_points"] + 1)[1:]
    if not np.any(np.isclose(d, r0)):
        d = np.sort(np.append(d, r0))
    d[np.isclose(d, r0)] = r0
    rng = _rng(cfg, 2)
    header = ["d", "d_over_r0"]
    cols = []
    for scheme, child in zip(SCHEMES, rng.spawn(len(SCHEMES))):
        header += [f"U_{scheme}_analytic", f"U_{scheme}_empirical"]
        analytic, empirical = [], []
        for dd, g in zip(d, child.spawn(len(d))):
            analytic.append(metrics.label_entropy(metrics.analytic_mislabel(dd, p, scheme).rows[0]))
            # label-disjoint windows: the estimate then rests on independent labels
            sset = _single_distance_set(cfg, scheme, dd, c["samples_per_point"], g,
                                        stride=label_lookahead(scheme))
            empirical.append(metrics.set_randomness(sset, metrics.EMPIRICAL).U)
        cols += [analytic, empirical]
    run.csv("randomness_curve.csv", header, zip(d, d / r0, *cols))
    return run.finish()


def table_reports(cfg: ExperimentConfig, scheme: str, rng: np.random.Generator):
    """Simulate a spread-distance set, split it and compare the configured
    predictors. Returns ``(reports, test_set)``."""
    sset = spread_set(cfg, scheme, rng)
    tr, te = split(sset, cfg["train_fraction"], rng)
    return compare_models(cfg.predictor_configs(), tr, te, cfg["mislabel_source"], cfg.params), te


def cmd_table(cfg: ExperimentConfig) -> list[Path]:
    run = _Run(cfg, "table")
    rng = _rng(cfg, 3)
    for scheme, child in zip(cfg["schemes"], rng.spawn(len(cfg["schemes"]))):
        reps, te = table_reports(cfg, scheme, child)
        m = te.n_classes
        run.csv(f"table_{scheme}.csv", REPORT_HEADER + metrics.confusion_header(m),
                [_report_row(r) for r in reps])
        rand = metrics.set_randomness(te, cfg["mislabel_source"], cfg.params)
        run.csv(f"test_randomness_{scheme}.csv", metrics.ENV_REPORT_HEADER,
                metrics.env_report_rows(te, rand))
    return run.finish()


def static_sweep_rows(cfg: ExperimentConfig, scheme: str, d_factors, rng) -> list[list]:
    rows = []
    r0 = cfg.params.r0
    model_cfg = cfg.focus_config(scheme)
    for f, g in zip(d_factors, rng.spawn(len(d_factors))):
        sset = _single_distance_set(cfg, scheme, f * r0, cfg["static_sweep"]["samples_per_d"], g)
        tr, te = split(sset, cfg["train_fraction"], g)
        rep = evaluate(train(model_cfg, tr), te, cfg["mislabel_source"], cfg.params)
        rows.append([f * r0, f, rep.acc, rep.acc_max, rep.u_p, rep.U])
    return rows


def cmd_static_sweep(cfg: ExperimentConfig) -> list[Path]:
    run = _Run(cfg, "static-sweep")
    rng = _rng(cfg, 4)
    factors = cfg["static_sweep"]["d_factors"]
    for scheme, child in zip(cfg["schemes"], rng.spawn(len(cfg["schemes"]))):
        run.csv(f"static_{scheme}.csv", ["d", "d_over_r0", "ACC", "Acc_max", "U_p", "U"],
                static_sweep_rows(cfg, scheme, factors, child))
    return run.finish()


def dynamic_entries(cfg: ExperimentConfig, width: float, total: int) -> list:
    """Bins of the outer ``width`` (in r0 units) at both ends of
    ``(d_lo, d_hi)``; wider sets reach further towards r0 and are noisier."""
    c = cfg["dynamic_sweep"]
    r0 = cfg.params.r0
    bins = uniform_bins(r0, c["d_lo"], c["d_hi"], c["bin_width"], 1)
    eps = 1e-9 * r0
    chosen = [b for b, _ in bins
              if b[1] <= (c["d_lo"] + width) * r0 + eps or b[0] >= (c["d_hi"] - width) * r0 - eps]
    per = np.full(len(chosen), total // len(chosen))
    per[: total % len(chosen)] += 1
    return [(b, int(n)) for b, n in zip(chosen, per)]


def cmd_dynamic_sweep(cfg: ExperimentConfig) -> list[Path]:
    run = _Run(cfg, "dynamic-sweep")
    c = cfg["dynamic_sweep"]
    rng = _rng(cfg, 5)
    ds = cfg["dataset"]
    for scheme, child in zip(cfg["schemes"], rng.spawn(len(cfg["schemes"]))):
        model_cfg = cfg.focus_config(scheme)
        rows = []
        for i, (w, g) in enumerate(zip(c["widths"], child.spawn(len(c["widths"])))):
            entries = dynamic_entries(cfg, w, c["samples_per_set"])
            sset = assemble(entries, scheme, cfg["K"], cfg.params, g,
                            pairs_per_env=ds["pairs_per_env"], sentinel_dbm=ds["sentinel_dbm"])
            tr, te = split(sset, cfg["train_fraction"], g)
            rep = evaluate(train(model_cfg, tr), te, cfg["mislabel_source"], cfg.params)
            rows.append([i, w, len(entries), rep.acc, rep.acc_max, rep.U, rep.u_p])
        run.csv(f"dynamic_{scheme}.csv",
                ["set", "width_r0", "n_envs", "ACC", "Acc_max", "U", "U_p"], rows)
    return run.finish()


def filter_report(cfg: ExperimentConfig, model=None):
    """Train the two-class focus model (unless given) and sweep the gate over
    the default grid. Returns ``(model, report, timeline_rng)``."""
    c = cfg["filter"]
    p = cfg.params
    rng = _rng(cfg, 6)
    data_rng, sweep_rng, tl_rng = rng.spawn(3)
    if model is None:
        sset = spread_set(cfg, TWO_CLASS, data_rng)
        tr, _ = split(sset, cfg["train_fraction"], data_rng)
        model = train(cfg.focus_config(TWO_CLASS), tr)
    grid = default_grid(p.r0, c["n_grid"])
    rep = effective_rate_sweep(model, grid, c["cycles_per_d"], p, sweep_rng, c["u_th"])
    return model, rep, tl_rng


def cmd_filter_demo(cfg: ExperimentConfig, model=None) -> list[Path]:
    """Gate fresh traces with a two-class model (trained here unless given)."""
    run = _Run(cfg, "filter-demo")
    c = cfg["filter"]
    p = cfg.params
    model, rep, tl_rng = filter_report(cfg, model)
    run.csv("filter_sweep.csv",
            ["d", "rate_before", "rate_after", "U_before", "U_after", "rate_analytic",
             "U_analytic"],
            zip(rep.d_grid, rep.rate_before, rep.rate_after, rep.U_before, rep.U_after,
                rep.rate_analytic, rep.U_analytic))
    rows = []
    for which, ivs in (("before", rep.unstable_before), ("after", rep.unstable_after)):
        for a, b in ivs:
            rows.append([which, a, b, b - a])
    run.csv("unstable_intervals.csv", ["curve", "start", "end", "width"], rows)
    summary = {
        "u_th": c["u_th"],
        "r0": p.r0,
        "width_before": interval_measure(rep.unstable_before),
        "width_after": interval_measure(rep.unstable_after),
        "peak_before": peak_randomness_location(rep, "before"),
        "peak_after": peak_randomness_location(rep, "after"),
        "peak_analytic": peak_randomness_location(rep, "analytic"),
    }
    run.text("intervals_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for f, g in zip(c["timeline_factors"], tl_rng.spawn(len(c["timeline_factors"]))):
        trace = generate_trace(f * p.r0, c["timeline_cycles"] + model.K, p, g,
                               cfg["dataset"]["sentinel_dbm"])
        gt = gate_trace(trace, model)
        run.csv(f"timeline_{f:g}r0.csv", ["cycle", "raw", "predicted", "effective"],
                zip(range(len(gt.raw)), gt.raw, gt.predicted, gt.effective))
    return run.finish()


COMMANDS = {
    "channel": cmd_channel_curves,
    "randomness": cmd_randomness_curve,
    "table": cmd_table,
    "static-sweep": cmd_static_sweep,
    "dynamic-sweep": cmd_dynamic_sweep,
    "filter-demo": cmd_filter_demo,
}
