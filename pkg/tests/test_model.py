"""Preset architectures: parameter counts, names, shape chain, freezing."""

import numpy as np
import pytest

from statekit.errors import ConfigError, DimensionError
from statekit.model import (ArchitectureSpec, Network, build_preset,
                            count_parameters, make_spec, set_frozen,
                            validate_chain)


def test_modified_vgg19_parameter_count():
    net = build_preset("modified_vgg19", 11, fc_width=1024)
    assert count_parameters(net) == 45_726_795


def test_original_vgg19_parameter_count():
    net = build_preset("original_vgg19", 1000)
    assert count_parameters(net) == 143_667_240


def test_tiny_test_parameter_count_and_entry_count():
    net = build_preset("tiny_test", 11, fc_width=32)
    assert count_parameters(net) == 37_459
    assert len(net.parameters()) == 12  # 6 weight layers x (weight, bias)


def test_fc_width_totals_follow_the_closed_form():
    # total(W) = conv trunk + fc1 (25088*W + W) + head (W*11 + 11)
    #          = 20_024_384 + 25_100*W + 11
    for width in (512, 1024, 2048):
        net = build_preset("modified_vgg19", 11, fc_width=width)
        assert count_parameters(net) == 20_024_384 + 25_100 * width + 11
    assert 20_024_384 + 25_100 * 1024 + 11 == 45_726_795


def test_conv_trunk_subtotal():
    net = build_preset("modified_vgg19", 11, fc_width=1024)
    conv_names = set(net.conv_layer_names())
    trunk = sum(p.size for name, p in net.parameters().items()
                if name.rpartition(".")[0] in conv_names)
    assert trunk == 20_024_384


def test_canonical_parameter_names():
    net = build_preset("modified_vgg19", 11, fc_width=1024)
    names = list(net.parameters())
    assert names[0] == "block1.conv1.weight"
    assert names[1] == "block1.conv1.bias"
    assert "block3.conv4.weight" in names
    assert "block5.conv4.bias" in names
    assert names[-4:] == ["fc1.weight", "fc1.bias", "head.weight", "head.bias"]
    assert len([n for n in names if n.endswith(".weight")]) == 18

    orig = build_preset("original_vgg19", 1000)
    onames = list(orig.parameters())
    assert "fc2.weight" in onames and onames[-2:] == ["head.weight", "head.bias"]


def test_first_conv_weight_shape():
    net = build_preset("modified_vgg19", 11)
    assert net.parameters()["block1.conv1.weight"].shape == (64, 3, 3, 3)
    assert net.parameters()["fc1.weight"].shape == (512 * 7 * 7, 1024)


def test_tiny_forward_backward_shapes():
    net = build_preset("tiny_test", 11, fc_width=32, dropout_rate=0.5, seed=3)
    x = np.random.default_rng(0).normal(size=(2, 3, 32, 32)).astype(np.float32)
    logits = net.forward(x, train=True, dropout_seed=[1, 2, 3])
    assert logits.shape == (2, 11)
    dx = net.backward(np.ones_like(logits) / 22.0)
    assert dx.shape == x.shape
    grads = net.gradients()
    assert all(g is not None and g.shape == net.parameters()[n].shape
               for n, g in grads.items())


def test_forward_rejects_wrong_input_shape():
    net = build_preset("tiny_test", 11, fc_width=32)
    with pytest.raises(DimensionError):
        net.forward(np.zeros((2, 3, 16, 16), dtype=np.float32))


def test_seeded_init_is_reproducible():
    a = build_preset("tiny_test", 11, fc_width=32, seed=5)
    b = build_preset("tiny_test", 11, fc_width=32, seed=5)
    c = build_preset("tiny_test", 11, fc_width=32, seed=6)
    for name in a.parameters():
        assert np.array_equal(a.parameters()[name], b.parameters()[name])
    assert not np.array_equal(a.parameters()["fc1.weight"],
                              c.parameters()["fc1.weight"])


def test_preset_argument_validation():
    with pytest.raises(ConfigError):
        build_preset("vgg16")
    with pytest.raises(ConfigError):
        build_preset("tiny_test", num_classes=1)
    with pytest.raises(ConfigError):
        build_preset("tiny_test", fc_width=0)
    with pytest.raises(ConfigError):
        build_preset("tiny_test", dropout_rate=1.0)


def test_spec_json_round_trip():
    spec = make_spec("tiny_test", 11, fc_width=32, dropout_rate=0.2)
    doc = spec.to_json()
    back = ArchitectureSpec.from_json(doc)
    assert back == spec
    net = Network(back, seed=1)
    assert count_parameters(net) == 37_459


def test_validate_chain_catches_discontinuities():
    spec = make_spec("tiny_test", 11, fc_width=32)
    spec.layers[2].in_channels = 999  # second conv now disagrees
    with pytest.raises(ConfigError):
        validate_chain(spec)
    good = make_spec("tiny_test", 11, fc_width=32)
    good.layers[-1].out_features = 7  # head no longer matches num_classes
    with pytest.raises(ConfigError):
        validate_chain(good)


def test_set_frozen_selectors():
    net = build_preset("tiny_test", 11, fc_width=32)
    set_frozen(net, "conv_trunk")
    frozen = net.frozen_param_names()
    assert "block1.conv1.weight" in frozen and "fc1.weight" not in frozen
    assert len(frozen) == 8
    set_frozen(net, "all")
    assert len(net.frozen_param_names()) == 12
    set_frozen(net, "none")
    assert net.frozen_param_names() == set()
    set_frozen(net, ["fc1", "head"])
    assert net.frozen_param_names() == {"fc1.weight", "fc1.bias",
                                        "head.weight", "head.bias"}
    with pytest.raises(ConfigError):
        set_frozen(net, "everything")
    with pytest.raises(ConfigError):
        set_frozen(net, ["no_such_layer"])


def test_set_parameter_validates_shape_and_name():
    net = build_preset("tiny_test", 11, fc_width=32)
    with pytest.raises(DimensionError):
        net.set_parameter("head.bias", np.zeros(7, dtype=np.float32))
    with pytest.raises(ConfigError):
        net.set_parameter("middle.bias", np.zeros(7, dtype=np.float32))


def test_dropout_layers_get_distinct_masks_per_position():
    net = build_preset("original_vgg19", 11, fc_width=1024, dropout_rate=0.5)
    positions = [pos for pos, (_, l) in enumerate(net.layers) if l.kind == "dropout"]
    assert len(positions) == 2
    # Different stack positions must imply different seeds per forward.
    tiny = build_preset("tiny_test", 11, fc_width=32, dropout_rate=0.5, seed=0)
    x = np.random.default_rng(1).normal(size=(1, 3, 32, 32)).astype(np.float32)
    a = tiny.forward(x, train=True, dropout_seed=[0, 1])
    b = tiny.forward(x, train=True, dropout_seed=[0, 2])
    assert not np.array_equal(a, b)
