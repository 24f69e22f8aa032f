#!/usr/bin/env python3
"""Compare SGD, Adam and RMSProp on the synthetic fixture.

Trains the tiny_test preset once per optimizer with a shared seed and
prints a side-by-side table of best validation loss and accuracy.
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

SETUPS = [
    ("sgd", OptimizerConfig(kind="sgd", learning_rate=0.05)),
    ("sgd+momentum", OptimizerConfig(kind="sgd", learning_rate=0.01, momentum=0.9)),
    ("adam", OptimizerConfig(kind="adam", learning_rate=0.002)),
    ("rmsprop", OptimizerConfig(kind="rmsprop", learning_rate=0.001)),
]


def load_splits(root: Path):
    entries, _ = load_manifest((root / "manifest.csv").read_text(encoding="utf-8"))
    cfg = PreprocessConfig(target_size=32)
    return {split: load_dataset(split_entries(entries, split), cfg, root)
            for split in ("train", "validation")}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", help="fixture directory (generated if omitted)")
    parser.add_argument("--epochs", type=int, default=25)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as scratch:
        root = Path(args.data) if args.data else Path(scratch) / "fixture"
        if not (root / "manifest.csv").exists():
            print(f"generating fixture under {root}")
            generate_fixture(root)
        splits = load_splits(root)

    tr_x, tr_y = splits["train"]
    va_x, va_y = splits["validation"]

    print(f"{'optimizer':<14} {'epochs':>6} {'best ep':>7} "
          f"{'best val loss':>13} {'val acc':>8}")
    for name, opt in SETUPS:
        net = build_preset("tiny_test", 11, fc_width=32, seed=args.seed)
        cfg = TrainConfig(max_epochs=args.epochs, batch_size=32, optimizer=opt,
                          early_stop_patience=args.epochs, seed=args.seed)
        result = train(net, tr_x, tr_y, va_x, va_y, cfg)
        best = result.records[result.best_epoch - 1]
        print(f"{name:<14} {len(result.records):>6} {result.best_epoch:>7} "
              f"{best.val_loss:>13.4f} {best.val_accuracy:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
