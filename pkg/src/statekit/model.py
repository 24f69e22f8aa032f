"""Architecture presets, network assembly, parameter accounting, freezing.

``build_preset`` produces the three named stacks:

* ``modified_vgg19``: the 16-conv trunk in the 64/128/256x4/512x4/512x4
  pattern with five maxpools, then flatten, FC-``fc_width``, dropout, and an
  FC head sized to the class count (18 weight layers at default width).
* ``original_vgg19``: the same trunk with the classic FC-4096/FC-4096 head.
* ``tiny_test``: a 32x32-input miniature (two 2-conv blocks) that mirrors
  the block structure at desk scale so the full pipeline runs in seconds.

Weight layers carry canonical names (``block{i}.conv{j}``, ``fc1``, ``fc2``,
``head``); checkpoint entries are ``<layer>.weight`` / ``<layer>.bias`` in
stack order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .layers import Conv3x3, Dense, Dropout, Flatten, MaxPool2x2, ReLU

PRESETS = ("modified_vgg19", "original_vgg19", "tiny_test")

WEIGHT_KINDS = ("conv3x3", "dense")

# Conv trunk of the 19-layer VGG family: (block, out_channels per conv).
VGG19_BLOCKS = ((1, (64, 64)), (2, (128, 128)), (3, (256,) * 4),
                (4, (512,) * 4), (5, (512,) * 4))
TINY_BLOCKS = ((1, (8, 8)), (2, (16, 16)))


@dataclass
class LayerDescriptor:
    """One layer in an architecture: kind plus the extents that kind needs."""

    kind: str
    name: str = ""
    in_channels: int = 0
    out_channels: int = 0
    in_features: int = 0
    out_features: int = 0
    dropout_rate: float = 0.0

    def to_json_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.name:
            d["name"] = self.name
        if self.kind == "conv3x3":
            d["in_channels"] = self.in_channels
            d["out_channels"] = self.out_channels
        elif self.kind == "dense":
            d["in_features"] = self.in_features
            d["out_features"] = self.out_features
        elif self.kind == "dropout":
            d["dropout_rate"] = self.dropout_rate
        return d


@dataclass
class ArchitectureSpec:
    name: str
    input_shape: tuple[int, int, int]
    layers: list[LayerDescriptor]
    num_classes: int
    fc_width: int

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name,
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "fc_width": self.fc_width,
            "layers": [d.to_json_dict() for d in self.layers],
        }, indent=2)

    @staticmethod
    def from_json(doc: str) -> "ArchitectureSpec":
        raw = json.loads(doc)
        layers = [LayerDescriptor(kind=d["kind"], name=d.get("name", ""),
                                  in_channels=d.get("in_channels", 0),
                                  out_channels=d.get("out_channels", 0),
                                  in_features=d.get("in_features", 0),
                                  out_features=d.get("out_features", 0),
                                  dropout_rate=d.get("dropout_rate", 0.0))
                  for d in raw["layers"]]
        return ArchitectureSpec(name=raw["name"], input_shape=tuple(raw["input_shape"]),
                                layers=layers, num_classes=raw["num_classes"],
                                fc_width=raw["fc_width"])


def validate_chain(spec: ArchitectureSpec) -> None:
    """Walk the stack symbolically and reject any shape discontinuity."""
    c, h, w = spec.input_shape
    flat = None
    for d in spec.layers:
        if d.kind == "conv3x3":
            if flat is not None:
                raise ConfigError(f"conv layer {d.name!r} after flatten")
            if d.in_channels != c:
                raise ConfigError(f"layer {d.name!r} expects {d.in_channels} channels, chain has {c}")
            c = d.out_channels
        elif d.kind == "maxpool2x2":
            if h % 2 or w % 2:
                raise ConfigError(f"maxpool on odd extents {h}x{w}")
            h, w = h // 2, w // 2
        elif d.kind == "flatten":
            flat = c * h * w
        elif d.kind == "dense":
            if flat is None:
                raise ConfigError(f"dense layer {d.name!r} before flatten")
            if d.in_features != flat:
                raise ConfigError(f"layer {d.name!r} expects {d.in_features} features, chain has {flat}")
            flat = d.out_features
        elif d.kind not in ("relu", "dropout"):
            raise ConfigError(f"unknown layer kind {d.kind!r}")
    last_dense = [d for d in spec.layers if d.kind == "dense"]
    if not last_dense or last_dense[-1].out_features != spec.num_classes:
        raise ConfigError("final dense layer must emit num_classes features")


class Network:
    """An ordered layer stack with named parameters and frozen flags."""

    def __init__(self, spec: ArchitectureSpec, dtype=np.float32, seed: int = 0):
        validate_chain(spec)
        self.spec = spec
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.layers = []  # [(name, layer)]; name is "" for unparameterized layers
        for d in spec.layers:
            if d.kind == "conv3x3":
                self.layers.append((d.name, Conv3x3(d.in_channels, d.out_channels, dtype, rng)))
            elif d.kind == "dense":
                self.layers.append((d.name, Dense(d.in_features, d.out_features, dtype, rng)))
            elif d.kind == "maxpool2x2":
                self.layers.append(("", MaxPool2x2()))
            elif d.kind == "relu":
                self.layers.append(("", ReLU()))
            elif d.kind == "flatten":
                self.layers.append(("", Flatten()))
            elif d.kind == "dropout":
                self.layers.append(("", Dropout(d.dropout_rate)))

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    def weight_layers(self):
        return [(n, l) for n, l in self.layers if l.kind in WEIGHT_KINDS]

    def conv_layer_names(self) -> list[str]:
        return [n for n, l in self.layers if l.kind == "conv3x3"]

    def parameters(self) -> dict[str, np.ndarray]:
        """Named parameter tensors in stack order."""
        out = {}
        for name, layer in self.weight_layers():
            out[f"{name}.weight"] = layer.weight
            out[f"{name}.bias"] = layer.bias
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self.weight_layers():
            out[f"{name}.weight"] = layer.grads.get("weight")
            out[f"{name}.bias"] = layer.grads.get("bias")
        return out

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        layer_name, _, which = name.rpartition(".")
        for n, layer in self.weight_layers():
            if n == layer_name:
                current = getattr(layer, which)
                if current.shape != value.shape:
                    raise DimensionError(
                        f"parameter {name} has shape {current.shape}, got {value.shape}")
                current[...] = value.astype(self.dtype, copy=False)
                return
        raise ConfigError(f"no parameter named {name!r}")

    def frozen_param_names(self) -> set[str]:
        out = set()
        for name, layer in self.weight_layers():
            if layer.frozen:
                out.update((f"{name}.weight", f"{name}.bias"))
        return out

    def forward(self, x: np.ndarray, train: bool = False, dropout_seed=0) -> np.ndarray:
        if x.ndim != 4 or x.shape[1:] != tuple(self.spec.input_shape):
            raise DimensionError(
                f"network expects [N,{','.join(map(str, self.spec.input_shape))}], got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        base = list(np.atleast_1d(np.asarray(dropout_seed, dtype=np.uint64)))
        for pos, (_, layer) in enumerate(self.layers):
            if layer.kind == "dropout":
                layer.seed = base + [pos]
            x = layer.forward(x, train=train)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        g = dlogits
        for _, layer in reversed(self.layers):
            g = layer.backward(g)
        return g


def _head_descriptors(in_features: int, widths: list[int], num_classes: int,
                      dropout_rate: float) -> list[LayerDescriptor]:
    out = [LayerDescriptor("flatten")]
    feats = in_features
    for i, wdt in enumerate(widths, start=1):
        out.append(LayerDescriptor("dense", name=f"fc{i}", in_features=feats, out_features=wdt))
        out.append(LayerDescriptor("relu"))
        out.append(LayerDescriptor("dropout", dropout_rate=dropout_rate))
        feats = wdt
    out.append(LayerDescriptor("dense", name="head", in_features=feats, out_features=num_classes))
    return out


def _trunk_descriptors(blocks, in_channels: int) -> tuple[list[LayerDescriptor], int]:
    out = []
    c = in_channels
    for block, channels in blocks:
        for j, co in enumerate(channels, start=1):
            out.append(LayerDescriptor("conv3x3", name=f"block{block}.conv{j}",
                                       in_channels=c, out_channels=co))
            out.append(LayerDescriptor("relu"))
            c = co
        out.append(LayerDescriptor("maxpool2x2"))
    return out, c


def make_spec(name: str, num_classes: int = 11, fc_width: int = 1024,
              dropout_rate: float = 0.0) -> ArchitectureSpec:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    if fc_width < 1:
        raise ConfigError(f"fc_width must be >= 1, got {fc_width}")
    if not 0.0 <= dropout_rate < 1.0:
        raise ConfigError(f"dropout_rate must be in [0, 1), got {dropout_rate}")

    if name == "tiny_test":
        input_shape = (3, 32, 32)
        trunk, c = _trunk_descriptors(TINY_BLOCKS, 3)
        pools = len(TINY_BLOCKS)
        widths = [fc_width]
    else:
        input_shape = (3, 224, 224)
        trunk, c = _trunk_descriptors(VGG19_BLOCKS, 3)
        pools = len(VGG19_BLOCKS)
        widths = [4096, 4096] if name == "original_vgg19" else [fc_width]

    side = input_shape[1] >> pools
    layers = trunk + _head_descriptors(c * side * side, widths, num_classes, dropout_rate)
    return ArchitectureSpec(name=name, input_shape=input_shape, layers=layers,
                            num_classes=num_classes, fc_width=fc_width)


def build_preset(name: str, num_classes: int = 11, fc_width: int = 1024,
                 dropout_rate: float = 0.0, *, seed: int = 0, dtype=np.float32) -> Network:
    """Construct a freshly initialized network from a named preset."""
    return Network(make_spec(name, num_classes, fc_width, dropout_rate), dtype=dtype, seed=seed)


def count_parameters(net: Network) -> int:
    """Exact total of all weight and bias elements."""
    return sum(int(p.size) for p in net.parameters().values())


def set_frozen(net: Network, selector) -> Network:
    """Update frozen flags: 'conv_trunk', 'all', 'none', or a layer-name list.

    Frozen layers receive zero parameter updates; gradients still flow
    through them.
    """
    if isinstance(selector, str):
        if selector == "conv_trunk":
            targets = set(net.conv_layer_names())
        elif selector == "all":
            targets = {n for n, _ in net.weight_layers()}
        elif selector == "none":
            targets = set()
        else:
            raise ConfigError(f"unknown freeze selector {selector!r}")
    else:
        known = {n for n, _ in net.weight_layers()}
        targets = set(selector)
        missing = targets - known
        if missing:
            raise ConfigError(f"unknown layer name(s) in freeze list: {sorted(missing)}")
    for name, layer in net.weight_layers():
        layer.frozen = name in targets
    return net
