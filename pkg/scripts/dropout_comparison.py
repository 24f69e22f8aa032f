#!/usr/bin/env python3
"""Measure how dropout changes the overfitting profile on the fixture.

The synthetic held-out splits carry deliberate label noise, so an
unregularized tiny_test run shows validation loss climbing once train
accuracy saturates.  This script repeats the run at several dropout
rates and reports where the validation loss bottoms out and how far it
rebounds by the final epoch.
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from statekit.data import PreprocessConfig, load_dataset, load_manifest, split_entries
from statekit.fixture import generate_fixture
from statekit.model import build_preset
from statekit.optim import OptimizerConfig
from statekit.training import TrainConfig, train

RATES = (0.0, 0.2, 0.5)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", help="fixture directory (generated if omitted)")
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as scratch:
        root = Path(args.data) if args.data else Path(scratch) / "fixture"
        if not (root / "manifest.csv").exists():
            print(f"generating fixture under {root}")
            generate_fixture(root)
        entries, _ = load_manifest((root / "manifest.csv").read_text(encoding="utf-8"))
        cfg = PreprocessConfig(target_size=32)
        tr_x, tr_y = load_dataset(split_entries(entries, "train"), cfg, root)
        va_x, va_y = load_dataset(split_entries(entries, "validation"), cfg, root)

    print(f"{'dropout':>7} {'best ep':>7} {'best val loss':>13} "
          f"{'final val loss':>14} {'rebound':>8} {'final train acc':>15}")
    for rate in RATES:
        net = build_preset("tiny_test", 11, fc_width=32,
                           dropout_rate=rate, seed=args.seed)
        tcfg = TrainConfig(
            max_epochs=args.epochs, batch_size=32,
            optimizer=OptimizerConfig(kind="adam", learning_rate=0.002),
            early_stop_patience=args.epochs, seed=args.seed)
        result = train(net, tr_x, tr_y, va_x, va_y, tcfg)
        losses = [r.val_loss for r in result.records]
        best = result.best_epoch
        rebound = losses[-1] - losses[best - 1]
        print(f"{rate:>7.1f} {best:>7} {losses[best - 1]:>13.4f} "
              f"{losses[-1]:>14.4f} {rebound:>+8.4f} "
              f"{result.records[-1].train_accuracy:>15.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
