"""Command-line entry point.

Exit codes: 0 success, 1 configuration error (or a failed ``--expect`` /
gradient check), 2 data or checkpoint error, 3 numerical abort.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (DEFAULT_LABEL, apply_standardization, load_csv, standardize, stratified_split,
                   synthetic_dataset, write_csv)
from .errors import CheckpointError, ConfigError, DataError, NumericalAbort, RegunetError
from .fileio import atomic_write_text
from .models import VARIANTS, ModelSpec, build
from .training import TrainConfig, evaluate, export_history, gradient_check, tiny_spec, train

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

TRAIN_DEFAULTS = {
    "data": None,
    "label": DEFAULT_LABEL,
    "variant": "residual_concat",
    "alpha": 0.01,
    "epochs": 200,
    "batch_size": 32,
    "val_fraction": 0.1,
    "seed": 0,
    "lr": 0.001,
    "out": "out",
    "synthetic": False,
    "n": 500,
    "flip_rate": 0.0,
    "margin": 0.5,
    "impute": "none",
    "exclude": [],
    "hidden_width": 512,
    "head_width": 128,
    "flush_every": 0,
}


def _coerce(key, text):
    default = TRAIN_DEFAULTS[key]
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError("%s expects a boolean, got %r" % (key, text))
    if isinstance(default, list):
        return [part.strip() for part in text.split(",") if part.strip()]
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError("%s expects a number, got %r" % (key, text)) from None
    return None if text == "" else text


def read_config_file(path):
    """Parse a JSON object or flat ``key = value`` lines (``#`` comments)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    if text.lstrip().startswith("{"):
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config %s is not valid JSON: %s" % (path, exc)) from None
    else:
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected key = value" % (path, lineno))
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in TRAIN_DEFAULTS:
                raise ConfigError("%s:%d: unknown key %r" % (path, lineno, key))
            values[key] = _coerce(key, value)
    unknown = set(values) - set(TRAIN_DEFAULTS)
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    return values


def resolve_config(args):
    """Defaults, then the config file, then explicit command-line flags."""
    resolved = dict(TRAIN_DEFAULTS)
    if args.config:
        resolved.update(read_config_file(args.config))
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if resolved["variant"] not in VARIANTS:
        raise ConfigError("unknown variant %r" % resolved["variant"])
    if not resolved["synthetic"] and not resolved["data"]:
        raise ConfigError("give --data PATH or --synthetic")
    return resolved


def _dataset_for(source):
    if source["synthetic"]:
        return synthetic_dataset(source["n"], dim=41, margin=source["margin"],
                                 flip_rate=source["flip_rate"], seed=source["seed"])
    return load_csv(source["data"], source["label"], impute=source["impute"], exclude=source["exclude"])


def _pct(value):
    return "%.2f%%" % (100.0 * value)


def cmd_train(args):
    cfg = resolve_config(args)
    ds = _dataset_for(cfg)
    split = stratified_split(ds, cfg["val_fraction"], cfg["seed"])
    ds = standardize(ds, split)
    spec = ModelSpec(cfg["variant"], input_dim=ds.dim, hidden_width=cfg["hidden_width"],
                     head_width=cfg["head_width"], alpha=cfg["alpha"], seed=cfg["seed"])
    tcfg = TrainConfig(epochs=cfg["epochs"], batch_size=cfg["batch_size"], lr=cfg["lr"],
                       shuffle_seed=cfg["seed"], val_fraction=cfg["val_fraction"], alpha=cfg["alpha"],
                       variant=cfg["variant"], flush_every=cfg["flush_every"])
    model = build(spec)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    atomic_write_text(os.path.join(out, "resolved-config.json"), json.dumps(cfg, indent=1) + "\n")

    def flush(history, record):
        if tcfg.flush_every and record.epoch % tcfg.flush_every == 0:
            export_history(history, os.path.join(out, "history.csv"), "csv")

    history = train(model, ds, split, tcfg, callback=flush)
    export_history(history, os.path.join(out, "history.csv"), "csv")
    export_history(history, os.path.join(out, "history.json"), "json")
    model.standardization = ds.standardization
    model.provenance = {key: cfg[key] for key in
                        ("data", "label", "synthetic", "n", "flip_rate", "margin", "impute", "exclude",
                         "seed", "val_fraction")}
    save_checkpoint(model, os.path.join(out, "checkpoint.json"))
    last = history.last
    val_acc = "n/a" if last.val_acc is None else "%.2f%%" % last.val_acc
    val_loss = "n/a" if last.val_loss is None else _pct(last.val_loss)
    print("%s %.2f%% %s %s %s" % (cfg["variant"], last.train_acc, val_acc, _pct(last.train_loss), val_loss))
    return EXIT_OK


def cmd_eval(args):
    if not 0.0 < args.threshold < 1.0:
        raise ConfigError("--threshold must lie in (0, 1)")
    try:
        model = load_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        raise DataError(str(exc)) from exc
    prov = model.provenance or {}
    if args.data:
        source = dict(TRAIN_DEFAULTS, data=args.data, label=args.label or prov.get("label", DEFAULT_LABEL),
                      impute=args.impute or prov.get("impute", "none"), exclude=prov.get("exclude", []))
    elif prov:
        source = dict(TRAIN_DEFAULTS, **prov)
    else:
        raise ConfigError("checkpoint has no data provenance; give --data PATH")
    ds = _dataset_for(source)
    if ds.dim != model.spec.input_dim:
        raise DataError("checkpoint expects %d features, data has %d" % (model.spec.input_dim, ds.dim))
    if model.standardization is None:
        raise DataError("checkpoint carries no standardization transform")
    if args.split == "all":
        indices = np.arange(ds.n)
    else:
        if "val_fraction" not in prov:
            raise ConfigError("checkpoint has no split provenance; use --split all")
        split = stratified_split(ds, prov["val_fraction"], prov["seed"])
        indices = split.train_idx if args.split == "train" else split.val_idx
    ds = apply_standardization(ds, model.standardization)
    loss, acc = evaluate(model, ds, indices, threshold=args.threshold)
    print("%s %s %.2f%% %s" % (model.spec.variant, args.split, acc, _pct(loss)))
    return EXIT_OK


def cmd_gradcheck(args):
    variants = [args.variant] if args.variant else list(VARIANTS)
    status = EXIT_OK
    for variant in variants:
        result = gradient_check(tiny_spec(variant, seed=args.seed), seed=args.seed)
        verdict = "ok" if result.passed else "FAIL"
        print("%-16s max_rel_error=%.3e worst=%s%s checked=%d skipped=%d %s"
              % (variant, result.max_rel_error, result.worst_param, list(result.worst_index),
                 result.checked, result.skipped, verdict))
        if not result.passed:
            print("gradient check failed: %s, parameter %s" % (variant, result.worst_param), file=sys.stderr)
            status = EXIT_CONFIG
    return status


def cmd_params(args):
    spec = ModelSpec(args.variant, input_dim=args.input_dim, hidden_width=args.hidden_width,
                     head_width=args.head_width)
    model = build(spec)
    rows = model.layer_table()
    if args.branch_only:
        names = {layer.name for layer in model.branches[0].layers()}
        rows = [row for row in rows if row[0] in names]
    total = sum(row[3] for row in rows)
    for name, kind, shape, count in rows:
        print("%-18s %-12s %-10s %10d" % (name, kind, shape, count))
    print("%-18s %-12s %-10s %10d" % ("total", "", "", total))
    if args.expect is not None and total != args.expect:
        print("expected %d parameters, counted %d" % (args.expect, total), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_synth(args):
    ds = synthetic_dataset(args.n, dim=args.dim, margin=args.margin, flip_rate=args.flip_rate, seed=args.seed)
    write_csv(ds, args.out, args.label)
    print("wrote %d rows x %d features to %s" % (ds.n, ds.dim, args.out))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    parser = _Parser(prog="regunet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="split, standardize, build and train one variant")
    p.add_argument("--config", help="JSON or key=value file; flags override it")
    p.add_argument("--data")
    p.add_argument("--label")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--val-fraction", type=float, dest="val_fraction")
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out")
    p.add_argument("--synthetic", action="store_true", default=None)
    p.add_argument("--n", type=int)
    p.add_argument("--flip-rate", type=float, dest="flip_rate")
    p.add_argument("--margin", type=float)
    p.add_argument("--impute", choices=("none", "median"))
    p.add_argument("--exclude", action="append", help="feature column to ignore (repeatable)")
    p.add_argument("--hidden-width", type=int, dest="hidden_width")
    p.add_argument("--head-width", type=int, dest="head_width")
    p.add_argument("--flush-every", type=int, dest="flush_every")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--label")
    p.add_argument("--impute", choices=("none", "median"))
    p.add_argument("--split", choices=("all", "train", "val"), default="all")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check at tiny scale")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("params", help="per-layer parameter counts")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--branch-only", action="store_true")
    p.add_argument("--expect", type=int)
    p.add_argument("--input-dim", type=int, default=41)
    p.add_argument("--hidden-width", type=int, default=512)
    p.add_argument("--head-width", type=int, default=128)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("synth", help="write a synthetic separable dataset as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--dim", type=int, default=41)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--flip-rate", type=float, default=0.0, dest="flip_rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label", default=DEFAULT_LABEL)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalAbort as exc:
        print("numerical abort: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CheckpointError) as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, RegunetError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
