"""Command-line front end: ``atcl {gen,train,eval,sweep,hist}``.

Every command reads an optional JSON experiment config (``--config``), applies
command-line overrides, validates everything, and writes its artifacts plus a
``manifest.json`` echoing the resolved config under ``--out``. Passing that
manifest back as ``--config`` reproduces the run; ``eval`` and ``hist`` read
``<out>/manifest.json`` on their own when no ``--config`` is given.

Exit codes: 0 success, 1 runtime error, 2 usage or config error.
"""

import argparse
import csv
from dataclasses import asdict, dataclass, field, fields, replace
import json
import logging
import os
import sys

from .data import SynthConfig, generate, read_splits, write_splits
from .errors import AtclError, ConfigError
from .evaluation import cosine_histograms, evaluate, write_histograms, write_report
from .model import (
    TrainConfig,
    UNIT_BANK_LOSSES,
    fit,
    forward,
    load_checkpoint,
    save_checkpoint,
    write_history,
)

log = logging.getLogger("atcl")


@dataclass(frozen=True)
class EvalOptions:
    cutoff: int = None
    bins: int = 40
    metric: str = "cosine"

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 1:
            raise ConfigError("eval.cutoff must be >= 1")
        if self.bins < 1:
            raise ConfigError("eval.bins must be >= 1")
        if self.metric not in ("cosine", "angular"):
            raise ConfigError("eval.metric must be 'cosine' or 'angular'")


@dataclass(frozen=True)
class ExperimentConfig:
    data: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalOptions = field(default_factory=EvalOptions)
    out: str = "runs/default"
    data_dir: str = None

    def to_dict(self):
        return {
            "data": asdict(self.data),
            "train": self.train.to_dict(),
            "eval": asdict(self.eval),
            "out": self.out,
            "data_dir": self.data_dir,
        }


def _section(cls, values, name):
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from None


def config_from_dict(raw):
    unknown = set(raw) - {"data", "train", "eval", "out", "data_dir"}
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    return ExperimentConfig(
        data=_section(SynthConfig, raw.get("data"), "data"),
        train=_section(TrainConfig, raw.get("train"), "train"),
        eval=_section(EvalOptions, raw.get("eval"), "eval"),
        out=raw.get("out", "runs/default"),
        data_dir=raw.get("data_dir"),
    )


def resolve_config(args, reuse_manifest=False):
    """Load ``--config`` (or, with ``reuse_manifest``, ``<out>/manifest.json``) and apply overrides."""
    raw = {}
    path = args.config
    if path is None and reuse_manifest and args.out is not None:
        candidate = os.path.join(args.out, "manifest.json")
        path = candidate if os.path.exists(candidate) else None
    if path:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    cfg = config_from_dict(raw)
    train_over = {}
    if args.seed is not None:
        cfg = replace(cfg, data=replace(cfg.data, seed=args.seed))
        train_over["seed"] = args.seed
    if args.loss is not None:
        train_over["loss_kind"] = args.loss
    if args.margin is not None:
        train_over["margin"] = args.margin
    if args.lam is not None:
        train_over["lam"] = args.lam
    if args.epochs is not None:
        train_over["epochs"] = args.epochs
    if train_over:
        cfg = replace(cfg, train=replace(cfg.train, **train_over))
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def write_manifest(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "manifest.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_data(cfg):
    if cfg.data_dir:
        return read_splits(cfg.data_dir)
    return generate(cfg.data)


def _checkpoint_dir(cfg):
    return os.path.join(cfg.out, "checkpoint")


def _load_trained(cfg):
    ckpt = _checkpoint_dir(cfg)
    if not os.path.isdir(ckpt):
        raise FileNotFoundError(f"no checkpoint at {ckpt}; run 'train' first")
    model, _ = load_checkpoint(ckpt, unit_bank=cfg.train.loss_kind in UNIT_BANK_LOSSES)
    return model


def cmd_gen(cfg):
    write_manifest(cfg)
    paths = write_splits(os.path.join(cfg.out, "data"), generate(cfg.data))
    for name, path in paths.items():
        log.info("wrote %s split to %s", name, path)


def cmd_train(cfg):
    write_manifest(cfg)
    result = fit(load_data(cfg), cfg.train)
    save_checkpoint(_checkpoint_dir(cfg), result.model, result.bank)
    write_history(os.path.join(cfg.out, "history.csv"), result.history)
    log.info("final loss %.6g", result.history[-1]["loss"] if result.history else float("nan"))
    return result


def cmd_eval(cfg):
    write_manifest(cfg)
    test = load_data(cfg).subset("test")
    model = _load_trained(cfg)
    report = evaluate(forward(model, test.X), test.labels, cutoff=cfg.eval.cutoff,
                      metric=cfg.eval.metric)
    write_report(report, os.path.join(cfg.out, "report.json"),
                 os.path.join(cfg.out, "report.csv"))
    log.info("MAP %.6f AUC %.6f", report.map, report.auc)
    return report


def cmd_hist(cfg):
    write_manifest(cfg)
    test = load_data(cfg).subset("test")
    model = _load_trained(cfg)
    hist = cosine_histograms(forward(model, test.X), test.labels, bins=cfg.eval.bins)
    write_histograms(hist, os.path.join(cfg.out, "histogram.json"),
                     os.path.join(cfg.out, "histogram.csv"))
    return hist


def cmd_sweep(cfg, axis, values):
    """Train and evaluate once per value of ``margin`` or ``lambda``; write ``sweep.csv``."""
    key = {"margin": "margin", "lambda": "lam"}[axis]
    write_manifest(cfg)
    ds = load_data(cfg)
    test = ds.subset("test")
    rows = []
    for v in values:
        tcfg = replace(cfg.train, **{key: v})
        result = fit(ds, tcfg)
        report = evaluate(forward(result.model, test.X), test.labels, cutoff=cfg.eval.cutoff,
                          metric=cfg.eval.metric)
        log.info("%s=%g MAP %.6f AUC %.6f", axis, v, report.map, report.auc)
        rows.append((v, report.map, report.auc))
    with open(os.path.join(cfg.out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis, "map", "auc"])
        for v, m, a in rows:
            w.writerow([repr(float(v)), repr(float(m)), repr(float(a))])
    return rows


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (a manifest.json works)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--loss", help="loss kind, e.g. atcl, atcl+softmax, softmax")
    common.add_argument("--margin", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--epochs", type=int)

    parser = argparse.ArgumentParser(prog="atcl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="write synthetic dataset splits")
    sub.add_parser("train", parents=[common], help="train and write checkpoint + history.csv")
    sub.add_parser("eval", parents=[common], help="evaluate retrieval on the test split")
    sub.add_parser("hist", parents=[common], help="cosine-distance histograms on the test split")
    sweep = sub.add_parser("sweep", parents=[common], help="MAP/AUC over margin or lambda values")
    sweep.add_argument("--axis", choices=["margin", "lambda"], required=True)
    sweep.add_argument("--values", type=_float_list, required=True)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args, reuse_manifest=args.command in ("eval", "hist"))
        if args.command == "gen":
            cmd_gen(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "eval":
            cmd_eval(cfg)
        elif args.command == "hist":
            cmd_hist(cfg)
        else:
            cmd_sweep(cfg, args.axis, args.values)
    except ConfigError as exc:
        print(f"atcl: config error: {exc}", file=sys.stderr)
        return 2
    except (AtclError, OSError, FloatingPointError) as exc:
        print(f"atcl: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
