"""Run configuration: one JSON document describing an experiment.

Every experimental knob lives here rather than in CLI flags so a run is
reproducible from the config file alone (flags may override only seed and
output directory, for sweep convenience). Parsing is strict: unknown keys
anywhere in the document are rejected, which catches typos before hours of
training are wasted on the wrong setting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import NUM_CLASSES, PreprocessConfig
from .errors import ConfigError
from .model import PRESETS
from .optim import OptimizerConfig
from .training import TrainConfig

FREEZE_CHOICES = ("none", "conv_trunk", "all")
INIT_MODES = ("strict", "trunk_only")


@dataclass
class RunConfig:
    preset: str = "modified_vgg19"
    num_classes: int = NUM_CLASSES
    fc_width: int = 1024
    dropout_rate: float = 0.0
    freeze: object = "none"            # selector string or list of layer names
    manifest: str = ""
    output_dir: str = "runs/default"
    init_checkpoint: str = ""          # optional warm start
    init_mode: str = "trunk_only"
    seed: int = 0
    deterministic: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)

    def validate(self) -> "RunConfig":
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; "
                              f"expected one of {', '.join(PRESETS)}")
        if isinstance(self.freeze, str):
            if self.freeze not in FREEZE_CHOICES:
                raise ConfigError(f"freeze must be one of {', '.join(FREEZE_CHOICES)} "
                                  f"or a layer-name list, got {self.freeze!r}")
        elif not (isinstance(self.freeze, list)
                  and all(isinstance(x, str) for x in self.freeze)):
            raise ConfigError("freeze must be a selector string or a list of layer names")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"init_mode must be one of {', '.join(INIT_MODES)}, "
                              f"got {self.init_mode!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        # Keep the nested blocks and the top-level knobs coherent.
        self.train.optimizer = self.optimizer
        self.train.seed = self.seed
        self.train.deterministic = self.deterministic
        self.train.validate()
        self.preprocess.validate()
        return self


def _pop_typed(raw: dict, key: str, want: type, default, where: str):
    if key not in raw:
        return default
    value = raw.pop(key)
    if isinstance(value, bool) and want is not bool:
        raise ConfigError(f"{where}.{key} must be {want.__name__}, got a boolean")
    if want is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, want):
        raise ConfigError(f"{where}.{key} must be {want.__name__}, "
                          f"got {type(value).__name__}")
    return value


def _reject_leftovers(raw: dict, where: str) -> None:
    if raw:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(raw))}")


def _parse_optimizer(raw: dict) -> OptimizerConfig:
    cfg = OptimizerConfig(
        kind=_pop_typed(raw, "kind", str, "sgd", "optimizer"),
        learning_rate=_pop_typed(raw, "learning_rate", float, 0.0001, "optimizer"),
        momentum=_pop_typed(raw, "momentum", float, 0.0, "optimizer"),
        beta1=_pop_typed(raw, "beta1", float, 0.9, "optimizer"),
        beta2=_pop_typed(raw, "beta2", float, 0.999, "optimizer"),
        rho=_pop_typed(raw, "rho", float, 0.9, "optimizer"),
        epsilon=_pop_typed(raw, "epsilon", float, 1e-8, "optimizer"))
    _reject_leftovers(raw, "optimizer")
    return cfg


def _parse_train(raw: dict) -> TrainConfig:
    cfg = TrainConfig(
        max_epochs=_pop_typed(raw, "max_epochs", int, 50, "train"),
        batch_size=_pop_typed(raw, "batch_size", int, 64, "train"),
        early_stop_patience=_pop_typed(raw, "early_stop_patience", int, 5, "train"),
        early_stop_min_delta=_pop_typed(raw, "early_stop_min_delta", float, 0.0, "train"))
    _reject_leftovers(raw, "train")
    return cfg


def _parse_preprocess(raw: dict) -> PreprocessConfig:
    means = _pop_typed(raw, "channel_means", list, [0.485, 0.456, 0.406], "preprocess")
    stds = _pop_typed(raw, "channel_stds", list, [0.229, 0.224, 0.225], "preprocess")
    cfg = PreprocessConfig(
        target_size=_pop_typed(raw, "target_size", int, 224, "preprocess"),
        channel_means=tuple(float(v) for v in means),
        channel_stds=tuple(float(v) for v in stds))
    _reject_leftovers(raw, "preprocess")
    return cfg


def parse_run_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    freeze = raw.pop("freeze", "none")
    cfg = RunConfig(
        preset=_pop_typed(raw, "preset", str, "modified_vgg19", "config"),
        num_classes=_pop_typed(raw, "num_classes", int, NUM_CLASSES, "config"),
        fc_width=_pop_typed(raw, "fc_width", int, 1024, "config"),
        dropout_rate=_pop_typed(raw, "dropout_rate", float, 0.0, "config"),
        freeze=freeze,
        manifest=_pop_typed(raw, "manifest", str, "", "config"),
        output_dir=_pop_typed(raw, "output_dir", str, "runs/default", "config"),
        init_checkpoint=_pop_typed(raw, "init_checkpoint", str, "", "config"),
        init_mode=_pop_typed(raw, "init_mode", str, "trunk_only", "config"),
        seed=_pop_typed(raw, "seed", int, 0, "config"),
        deterministic=_pop_typed(raw, "deterministic", bool, True, "config"))
    opt_raw = raw.pop("optimizer", {})
    train_raw = raw.pop("train", {})
    pre_raw = raw.pop("preprocess", {})
    _reject_leftovers(raw, "config")
    for name, block in (("optimizer", opt_raw), ("train", train_raw),
                        ("preprocess", pre_raw)):
        if not isinstance(block, dict):
            raise ConfigError(f"{name} must be a JSON object")
    cfg.optimizer = _parse_optimizer(dict(opt_raw))
    cfg.train = _parse_train(dict(train_raw))
    cfg.preprocess = _parse_preprocess(dict(pre_raw))
    return cfg.validate()


def load_run_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text)
