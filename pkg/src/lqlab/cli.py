"""Command-line entry point: ``lqlab [--config PATH] [--seed N] [--out DIR] <command>``.

Exit codes: 0 success, 2 config error, 3 IO error, 4 numeric/validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .dataset import TWO_CLASS, load_csv, save_csv, split
from .experiments import (COMMANDS, REPORT_HEADER, ConfigError, ExperimentConfig, _Run,
                          _report_row, _rng, spread_set)
from .predictors import PredictorConfig, evaluate, load_model, save_model, train

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lqlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="JSON experiment config")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", type=str, help="override the output directory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name)

    ds = sub.add_parser("dataset").add_subparsers(dest="action", required=True)
    b = ds.add_parser("build", help="simulate the spread-distance dataset")
    b.add_argument("--scheme", default=TWO_CLASS)
    i = ds.add_parser("inspect", help="summarize a dataset CSV")
    i.add_argument("path", type=Path)

    md = sub.add_parser("model").add_subparsers(dest="action", required=True)
    t = md.add_parser("train", help="train one model and save it")
    t.add_argument("--data", type=Path, help="dataset CSV (default: simulate one)")
    t.add_argument("--scheme", default=TWO_CLASS)
    t.add_argument("--kind", help="predictor kind (default: the scheme's focus predictor)")
    e = md.add_parser("eval", help="evaluate a saved model on a dataset CSV")
    e.add_argument("model", type=Path)
    e.add_argument("data", type=Path)
    return ap


def _dataset_build(cfg: ExperimentConfig, scheme: str) -> list[Path]:
    run = _Run(cfg, "dataset")
    sset = spread_set(cfg, scheme, _rng(cfg, 7))
    path = save_csv(sset, run.dir / f"dataset_{scheme}.csv", {"seed": cfg["seed"]})
    run.files += [path, path.with_name(path.name + ".meta.json")]
    return run.finish()


def _dataset_inspect(path: Path) -> dict:
    sset = load_csv(path)
    out = {
        "path": str(path),
        "scheme": sset.scheme,
        "K": sset.K,
        "n_samples": len(sset),
        "n_envs": len(sset.envs),
        "label_counts": np.bincount(sset.labels, minlength=sset.n_classes).tolist(),
        "U_empirical": metrics.set_randomness(sset, metrics.EMPIRICAL).U,
    }
    if "params" in sset.meta:
        rep = metrics.set_randomness(sset, metrics.ANALYTIC)
        out.update(U_analytic=rep.U, A_analytic=rep.A, acc_max_analytic=rep.acc_max)
    return out


def _model_train(cfg: ExperimentConfig, args) -> list[Path]:
    run = _Run(cfg, "model")
    rng = _rng(cfg, 8)
    if args.data is not None:
        sset = load_csv(args.data)
    else:
        sset = spread_set(cfg, args.scheme, rng)
    mcfg = (PredictorConfig(args.kind, seed=cfg["seed"]) if args.kind
            else cfg.focus_config(sset.scheme))
    tr, te = split(sset, cfg["train_fraction"], rng)
    model = train(mcfg, tr)
    path = save_model(model, run.dir / f"model_{sset.scheme}_{mcfg.kind}.json")
    run.files.append(path)
    rep = evaluate(model, te, cfg["mislabel_source"], cfg.params)
    run.csv(f"holdout_{sset.scheme}_{mcfg.kind}.csv",
            REPORT_HEADER + metrics.confusion_header(sset.n_classes), [_report_row(rep)])
    return run.finish()


def _model_eval(cfg: ExperimentConfig, args) -> list[Path]:
    run = _Run(cfg, "model")
    model = load_model(args.model)
    sset = load_csv(args.data)
    rep = evaluate(model, sset, cfg["mislabel_source"], cfg.params)
    run.csv(f"eval_{args.model.stem}.csv",
            REPORT_HEADER + metrics.confusion_header(sset.n_classes), [_report_row(rep)])
    return run.finish()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict()
        cfg = cfg.with_overrides(seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.command in COMMANDS:
            files = COMMANDS[args.command](cfg)
        elif args.command == "dataset" and args.action == "build":
            files = _dataset_build(cfg, args.scheme)
        elif args.command == "dataset":
            print(json.dumps(_dataset_inspect(args.path), indent=2, sort_keys=True))
            return EXIT_OK
        elif args.action == "train":
            files = _model_train(cfg, args)
        else:
            files = _model_eval(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, KeyError, RuntimeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
