"""Training protocol: epoch loop, early stopping on validation loss, logging.

Each epoch runs forward/backward/update over every shuffled train batch,
then a full inference pass over the validation split. The best parameter
snapshot (lowest validation loss, earliest on ties) is what ``train``
returns, not the final-epoch weights.

Early stopping is streak-based: an epoch counts as an improvement only when
its validation loss beats the running best by more than ``min_delta``; once
``patience`` consecutive non-improvements accumulate, training stops.

In deterministic mode wall_seconds is recorded as 0.0 so two identical runs
produce byte-identical metrics files.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import make_batches
from .errors import ConfigError, NumericError
from .layers import softmax_xent, softmax_xent_backward
from .model import Network
from .optim import OptimizerConfig, OptimizerState, optimizer_step
from .tensor import argmax_last, deterministic_mode


@dataclass
class TrainConfig:
    max_epochs: int = 50
    batch_size: int = 64
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    early_stop_patience: int = 5
    early_stop_min_delta: float = 0.0
    seed: int = 0
    deterministic: bool = True

    def validate(self) -> "TrainConfig":
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")
        if self.early_stop_min_delta < 0:
            raise ConfigError(f"early_stop_min_delta must be >= 0, got {self.early_stop_min_delta}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        self.optimizer.validate()
        return self


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    wall_seconds: float


@dataclass
class TrainResult:
    net: Network                 # parameters restored to the best epoch
    records: list[EpochRecord]
    stop_reason: str             # "early_stop" or "max_epochs"
    best_epoch: int              # 1-based


def early_stop_check(val_losses, patience: int, min_delta: float = 0.0) -> tuple[bool, int]:
    """Evaluate the stopping rule over a 1-based sequence of epoch losses.

    Returns (stop, best_epoch) where best_epoch is the earliest epoch
    achieving the minimal loss. stop is True if at any point the streak of
    epochs without an improvement (> min_delta below the running best)
    reached ``patience``.
    """
    if len(val_losses) == 0:
        raise ConfigError("early_stop_check needs at least one loss")
    best = val_losses[0]
    best_epoch = 1
    streak = 0
    stop = False
    for epoch, loss in enumerate(val_losses[1:], start=2):
        if loss < best - min_delta:
            best = loss
            best_epoch = epoch
            streak = 0
        else:
            streak += 1
            if streak >= patience:
                stop = True
    return stop, best_epoch


def evaluate_epoch(net: Network, images: np.ndarray, labels: np.ndarray,
                   batch_size: int = 64) -> tuple[float, float, list[int]]:
    """Inference pass: mean loss, accuracy, and predictions in input order."""
    total_loss = 0.0
    correct = 0
    predictions: list[int] = []
    for batch in make_batches(images, labels, batch_size, shuffle=False):
        logits = net.forward(batch.images, train=False)
        loss, probs = softmax_xent(logits, batch.labels)
        total_loss += loss * len(batch)
        pred = argmax_last(probs)
        correct += int(np.sum(pred == batch.labels))
        predictions.extend(int(p) for p in pred)
    n = len(labels)
    return total_loss / n, correct / n, predictions


def train(net: Network, train_images: np.ndarray, train_labels: np.ndarray,
          val_images: np.ndarray, val_labels: np.ndarray, cfg: TrainConfig,
          on_epoch=None, on_best=None) -> TrainResult:
    """Run the full protocol and return the best-validation-loss snapshot.

    ``on_epoch(record)`` fires after every epoch; ``on_best(net, epoch)``
    fires whenever the validation loss improves (the moment to persist a
    checkpoint). Raises NumericError if a batch loss goes non-finite.
    """
    top = int(max(train_labels.max(), val_labels.max()))
    if top >= net.num_classes:
        raise ConfigError(f"network emits {net.num_classes} classes but labels reach {top}")
    state = OptimizerState(config=cfg.optimizer)
    records: list[EpochRecord] = []
    val_losses: list[float] = []
    best_snapshot = None
    best_epoch = 0
    stop_reason = "max_epochs"

    with deterministic_mode(cfg.deterministic):
        for epoch in range(1, cfg.max_epochs + 1):
            t0 = time.perf_counter()
            run_loss = 0.0
            run_correct = 0
            for batch_idx, batch in enumerate(
                    make_batches(train_images, train_labels, cfg.batch_size,
                                 cfg.seed, epoch)):
                logits = net.forward(batch.images, train=True,
                                     dropout_seed=[cfg.seed, epoch, batch_idx])
                loss, probs = softmax_xent(logits, batch.labels)
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss {loss} at epoch {epoch}, batch {batch_idx}")
                run_loss += loss * len(batch)
                run_correct += int(np.sum(argmax_last(probs) == batch.labels))
                net.backward(softmax_xent_backward(probs, batch.labels))
                optimizer_step(state, net.parameters(), net.gradients(),
                               net.frozen_param_names())

            n_train = len(train_labels)
            val_loss, val_acc, _ = evaluate_epoch(net, val_images, val_labels,
                                                  cfg.batch_size)
            wall = 0.0 if cfg.deterministic else time.perf_counter() - t0
            record = EpochRecord(epoch=epoch, train_loss=run_loss / n_train,
                                 train_accuracy=run_correct / n_train,
                                 val_loss=val_loss, val_accuracy=val_acc,
                                 wall_seconds=wall)
            records.append(record)
            val_losses.append(val_loss)

            stop, current_best = early_stop_check(
                val_losses, cfg.early_stop_patience, cfg.early_stop_min_delta)
            if current_best == epoch:
                best_epoch = epoch
                best_snapshot = {k: v.copy() for k, v in net.parameters().items()}
                if on_best is not None:
                    on_best(net, epoch)
            if on_epoch is not None:
                on_epoch(record)
            if stop:
                stop_reason = "early_stop"
                break

    for name, value in best_snapshot.items():
        net.set_parameter(name, value)
    return TrainResult(net=net, records=records, stop_reason=stop_reason,
                       best_epoch=best_epoch)


METRICS_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc,wall_seconds"


def format_metrics_row(r: EpochRecord) -> str:
    return (f"{r.epoch},{r.train_loss!r},{r.train_accuracy!r},"
            f"{r.val_loss!r},{r.val_accuracy!r},{r.wall_seconds!r}")


def write_metrics_csv(records: list[EpochRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in records:
            fh.write(format_metrics_row(r) + "\n")
