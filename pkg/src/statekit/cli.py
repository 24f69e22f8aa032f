"""Command-line entry point.

Subcommands: train, evaluate, predict, inspect. Each takes a JSON run
config (see config module); flags override only seed and output directory.
Errors print one machine-greppable line to stderr ("statekit: config error:
...") and map to distinct exit codes: 0 ok, 2 config, 3 data, 4 numeric
abort, 5 I/O. The env var STATEKIT_THREADS caps BLAS worker threads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .config import RunConfig, load_run_config
from .data import (CLASS_NAMES, PreprocessConfig, load_dataset, load_image,
                   load_manifest, preprocess_image, split_entries)
from .errors import ConfigError, DataError, NumericError, StatekitError
from .evaluation import (accuracies, confusion_matrix, emit_plots,
                         misclassification_report, plot_confusion)
from .fixture import generate_fixture
from .model import ArchitectureSpec, Network, build_preset, make_spec, set_frozen
from .tensor import set_deterministic
from .training import evaluate_epoch, train, write_metrics_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


def _build_network(cfg: RunConfig) -> Network:
    net = build_preset(cfg.preset, cfg.num_classes, cfg.fc_width,
                       cfg.dropout_rate, seed=cfg.seed)
    if cfg.init_checkpoint:
        ckpt.load_checkpoint(net, cfg.init_checkpoint, cfg.init_mode)
    set_frozen(net, cfg.freeze)
    return net


def _load_split(cfg: RunConfig, split: str):
    manifest_path = Path(cfg.manifest)
    if not cfg.manifest:
        raise ConfigError("config has no manifest path")
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {manifest_path}: {exc}") from exc
    entries, _ = load_manifest(text)
    chosen = split_entries(entries, split)
    if not chosen:
        raise DataError(f"manifest has no entries for split {split!r}")
    images, labels = load_dataset(chosen, cfg.preprocess, manifest_path.parent)
    return chosen, images, labels


def cmd_train(args) -> int:
    if args.make_fixture:
        manifest = generate_fixture(args.make_fixture)
        print(f"fixture written, manifest at {manifest}")
        if not args.config:
            return EXIT_OK
    if not args.config:
        raise ConfigError("train needs a config file (or --make-fixture DIR)")
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    if args.output_dir:
        cfg.output_dir = args.output_dir
    set_deterministic(cfg.deterministic)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = _build_network(cfg)
    _, train_x, train_y = _load_split(cfg, "train")
    _, val_x, val_y = _load_split(cfg, "validation")

    metrics_path = out / "metrics.csv"
    best_path = out / "best.skpt"
    records_so_far = []

    def on_epoch(record):
        records_so_far.append(record)
        write_metrics_csv(records_so_far, metrics_path)
        print(f"epoch {record.epoch}: train_loss {record.train_loss:.4f} "
              f"train_acc {record.train_accuracy:.4f} val_loss {record.val_loss:.4f} "
              f"val_acc {record.val_accuracy:.4f}")

    def on_best(network, epoch):
        ckpt.save_checkpoint(network, best_path)

    result = train(net, train_x, train_y, val_x, val_y, cfg.train,
                   on_epoch=on_epoch, on_best=on_best)
    emit_plots(result.records, None, out)
    best = result.records[result.best_epoch - 1]
    print(f"stopped: {result.stop_reason} after epoch {result.records[-1].epoch}")
    print(f"best epoch {result.best_epoch}: val_loss {best.val_loss:.6f} "
          f"val_acc {best.val_accuracy:.4f}")
    print(f"best checkpoint: {best_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_run_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    set_deterministic(cfg.deterministic)
    net = build_preset(cfg.preset, cfg.num_classes, cfg.fc_width,
                       cfg.dropout_rate, seed=cfg.seed)
    ckpt.load_checkpoint(net, args.checkpoint, "strict")
    entries, images, labels = _load_split(cfg, args.split)

    loss, acc, predictions = evaluate_epoch(net, images, labels,
                                            cfg.train.batch_size)
    names = CLASS_NAMES[:cfg.num_classes] if cfg.num_classes <= len(CLASS_NAMES) \
        else [f"class {i}" for i in range(cfg.num_classes)]
    cm = confusion_matrix(labels, predictions, list(names))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plot_confusion(cm, out)

    overall, per_class = accuracies(cm)
    print(f"split {args.split}: {len(labels)} samples, loss {loss:.6f}, "
          f"overall accuracy {overall:.4f}")
    for name, value in zip(cm.class_names, per_class):
        shown = "n/a" if value is None else f"{value:.4f}"
        print(f"  {name}: {shown}")
    worst = misclassification_report(cm, entries, predictions, top_n=3)
    for cell in worst[:5]:
        print(f"  confusion {cell.true_name} -> {cell.pred_name}: "
              f"{cell.count} samples ({cell.rate * 100:.1f}%)")
    print(f"confusion matrix written to {out / 'confusion_matrix.csv'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = load_run_config(args.config)
    set_deterministic(cfg.deterministic)
    net = build_preset(cfg.preset, cfg.num_classes, cfg.fc_width,
                       cfg.dropout_rate, seed=cfg.seed)
    ckpt.load_checkpoint(net, args.checkpoint, "strict")
    image = load_image(args.image)
    x = preprocess_image(image, cfg.preprocess, np.float32)[None]
    logits = net.forward(x, train=False)[0].astype(np.float64)
    z = logits - logits.max()
    probs = np.exp(z) / np.exp(z).sum()
    names = CLASS_NAMES[:cfg.num_classes] if cfg.num_classes <= len(CLASS_NAMES) \
        else [f"class {i}" for i in range(cfg.num_classes)]
    order = np.argsort(-probs, kind="stable")
    print(f"prediction: {names[int(order[0])]}")
    for idx in order:
        print(f"{names[int(idx)]} {float(probs[int(idx)])!r}")
    return EXIT_OK


def _inspect_rows(spec: ArchitectureSpec, frozen_names: set) -> tuple[list, int]:
    rows = []
    total = 0
    for d in spec.layers:
        if d.kind == "conv3x3":
            count = d.out_channels * d.in_channels * 9 + d.out_channels
            shape = f"[{d.out_channels},{d.in_channels},3,3]"
        elif d.kind == "dense":
            count = d.in_features * d.out_features + d.out_features
            shape = f"[{d.in_features},{d.out_features}]"
        else:
            rows.append((d.name or d.kind, d.kind, "-", 0, ""))
            continue
        total += count
        rows.append((d.name, d.kind, shape, count,
                     "frozen" if d.name in frozen_names else ""))
    return rows, total


def cmd_inspect(args) -> int:
    path = Path(args.target)
    try:
        with path.open("rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    if head == ckpt.MAGIC:
        entries = ckpt.read_entries(path.read_bytes())
        total = 0
        print(f"{'entry':<28} {'dtype':<6} {'shape':<20} params")
        for name, arr in entries:
            total += arr.size
            print(f"{name:<28} {str(arr.dtype):<6} {str(list(arr.shape)):<20} {arr.size}")
        print(f"total parameters: {total}")
        return EXIT_OK

    cfg = load_run_config(args.target)
    spec = make_spec(cfg.preset, cfg.num_classes, cfg.fc_width, cfg.dropout_rate)
    if isinstance(cfg.freeze, str):
        if cfg.freeze == "conv_trunk":
            frozen = {d.name for d in spec.layers if d.kind == "conv3x3"}
        elif cfg.freeze == "all":
            frozen = {d.name for d in spec.layers if d.name}
        else:
            frozen = set()
    else:
        frozen = set(cfg.freeze)
    rows, total = _inspect_rows(spec, frozen)
    print(f"preset {spec.name}, input [3,{spec.input_shape[1]},{spec.input_shape[2]}], "
          f"{spec.num_classes} classes")
    print(f"{'layer':<18} {'kind':<10} {'shape':<18} {'params':>12} frozen")
    for name, kind, shape, count, fro in rows:
        print(f"{name:<18} {kind:<10} {shape:<18} {count:>12} {fro}")
    print(f"total parameters: {total}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statekit",
        description="Train and evaluate cooking-state image classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the training protocol")
    p_train.add_argument("config", nargs="?", help="JSON run config")
    p_train.add_argument("--seed", type=int, help="override config seed")
    p_train.add_argument("--output-dir", help="override config output_dir")
    p_train.add_argument("--make-fixture", metavar="DIR",
                         help="generate the synthetic dataset fixture here")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="confusion matrix on a split")
    p_eval.add_argument("config", help="JSON run config")
    p_eval.add_argument("checkpoint", help="trained .skpt file")
    p_eval.add_argument("--split", default="test",
                        choices=("train", "validation", "test"))
    p_eval.add_argument("--output-dir", help="override config output_dir")
    p_eval.set_defaults(func=cmd_evaluate)

    p_pred = sub.add_parser("predict", help="classify one image")
    p_pred.add_argument("config", help="JSON run config")
    p_pred.add_argument("checkpoint", help="trained .skpt file")
    p_pred.add_argument("image", help="PPM or RAWIMG1 image")
    p_pred.set_defaults(func=cmd_predict)

    p_ins = sub.add_parser("inspect", help="layer table and parameter count")
    p_ins.add_argument("target", help="run config or .skpt checkpoint")
    p_ins.set_defaults(func=cmd_inspect)
    return parser


def _thread_cap():
    raw = os.environ.get("STATEKIT_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"STATEKIT_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"STATEKIT_THREADS must be >= 1, got {n}")
    return n


def main(argv=None) -> int:
    try:
        cap = _thread_cap()
        parser = make_parser()
        args = parser.parse_args(argv)
        if cap is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=cap):
                return args.func(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"statekit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"statekit: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"statekit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StatekitError as exc:
        print(f"statekit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"statekit: io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
