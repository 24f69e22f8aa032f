#!/usr/bin/env python3
"""Sweep the width of the penultimate dense layer.

Two parts: a symbolic parameter-count table for the full-size preset at
widths 512/1024/2048, then desk-scale training runs of tiny_test on the
synthetic fixture across a matching span of small widths.
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from statekit.data import PreprocessConfig, load_dataset, load_manifest, split_entries
from statekit.fixture import generate_fixture
from statekit.model import build_preset, make_spec
from statekit.optim import OptimizerConfig
from statekit.training import TrainConfig, train

FULL_WIDTHS = (512, 1024, 2048)
TINY_WIDTHS = (16, 32, 64, 128)


def spec_total(width: int) -> int:
    spec = make_spec("modified_vgg19", 11, fc_width=width)
    total = 0
    for layer in spec.layers:
        if layer.kind == "conv3x3":
            total += layer.out_channels * layer.in_channels * 9 + layer.out_channels
        elif layer.kind == "dense":
            total += layer.in_features * layer.out_features + layer.out_features
    return total


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", help="fixture directory (generated if omitted)")
    parser.add_argument("--epochs", type=int, default=25)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    print("modified_vgg19 parameter totals by fc width:")
    for width in FULL_WIDTHS:
        print(f"  fc_width {width:>5}: {spec_total(width):>12,}")
    print()

    with tempfile.TemporaryDirectory() as scratch:
        root = Path(args.data) if args.data else Path(scratch) / "fixture"
        if not (root / "manifest.csv").exists():
            print(f"generating fixture under {root}")
            generate_fixture(root)
        entries, _ = load_manifest((root / "manifest.csv").read_text(encoding="utf-8"))
        cfg = PreprocessConfig(target_size=32)
        tr_x, tr_y = load_dataset(split_entries(entries, "train"), cfg, root)
        va_x, va_y = load_dataset(split_entries(entries, "validation"), cfg, root)

    print(f"tiny_test on the fixture, {args.epochs} epochs each:")
    print(f"{'fc width':>8} {'params':>10} {'best ep':>7} "
          f"{'best val loss':>13} {'val acc':>8}")
    for width in TINY_WIDTHS:
        net = build_preset("tiny_test", 11, fc_width=width, seed=args.seed)
        n_params = sum(p.size for p in net.parameters().values())
        tcfg = TrainConfig(
            max_epochs=args.epochs, batch_size=32,
            optimizer=OptimizerConfig(kind="adam", learning_rate=0.002),
            early_stop_patience=args.epochs, seed=args.seed)
        result = train(net, tr_x, tr_y, va_x, va_y, tcfg)
        best = result.records[result.best_epoch - 1]
        print(f"{width:>8} {n_params:>10,} {result.best_epoch:>7} "
              f"{best.val_loss:>13.4f} {best.val_accuracy:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
