"""Optimizer updates against hand values and a scalar reference trajectory.

The reference below is written in plain Python floats, independently of the
numpy implementation, so a shared bug cannot hide in both.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statekit.errors import ConfigError, DimensionError
from statekit.optim import (OptimizerConfig, OptimizerState, make_state,
                            optimizer_step)


def scalar_reference(kind: str, w0: float, steps: int, lr: float = 0.0001,
                     momentum: float = 0.0, beta1: float = 0.9,
                     beta2: float = 0.999, rho: float = 0.9,
                     eps: float = 1e-8):
    """Run `steps` updates on f(w) = w^2/2 (so grad = w) and log each w."""
    w = w0
    m = v = vel = 0.0
    out = []
    for t in range(1, steps + 1):
        g = w
        if kind == "sgd":
            if momentum > 0:
                vel = momentum * vel + g
                w -= lr * vel
            else:
                w -= lr * g
        elif kind == "adam":
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            m_hat = m / (1 - beta1 ** t)
            v_hat = v / (1 - beta2 ** t)
            w -= lr * m_hat / (math.sqrt(v_hat) + eps)
        else:
            v = rho * v + (1 - rho) * g * g
            w -= lr * g / (math.sqrt(v) + eps)
        out.append(w)
    return out


def one_step(kind: str, **kwargs) -> float:
    cfg = OptimizerConfig(kind=kind, **kwargs)
    state = make_state(cfg)
    w = {"w": np.array([1.0])}
    g = {"w": np.array([0.5])}
    optimizer_step(state, w, g)
    return float(w["w"][0])


def test_sgd_hand_value():
    assert one_step("sgd") == pytest.approx(0.99995, abs=1e-7)


def test_adam_hand_value():
    # t=1: m_hat = 0.5, v_hat = 0.25, step = lr*0.5/(0.5+eps)
    assert one_step("adam") == pytest.approx(1.0 - 1e-4 * 0.5 / (0.5 + 1e-8), abs=1e-7)
    assert one_step("adam") == pytest.approx(0.99990000, abs=1e-7)


def test_rmsprop_hand_value():
    # v = 0.025, step = lr*0.5/(sqrt(0.025)+eps)
    assert one_step("rmsprop") == pytest.approx(0.99968377, abs=1e-7)


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_trajectory_matches_scalar_reference(kind):
    cfg = OptimizerConfig(kind=kind)
    state = make_state(cfg)
    params = {"w": np.array([1.0])}
    expected = scalar_reference(kind, 1.0, 100)
    for t in range(100):
        grads = {"w": params["w"].copy()}
        optimizer_step(state, params, grads)
        assert float(params["w"][0]) == pytest.approx(expected[t], abs=1e-6)
    assert state.t == 100


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_quadratic_objective_decreases_monotonically(kind):
    state = make_state(OptimizerConfig(kind=kind))
    params = {"w": np.array([1.0])}
    prev = 0.5 * float(params["w"][0]) ** 2
    for _ in range(100):
        optimizer_step(state, params, {"w": params["w"].copy()})
        value = 0.5 * float(params["w"][0]) ** 2
        assert value < prev
        prev = value


def test_sgd_momentum_accumulates():
    state = make_state(OptimizerConfig(kind="sgd", learning_rate=0.1, momentum=0.9))
    params = {"w": np.array([1.0])}
    optimizer_step(state, params, {"w": np.array([1.0])})
    assert float(params["w"][0]) == pytest.approx(0.9)
    optimizer_step(state, params, {"w": np.array([1.0])})
    # velocity = 0.9*1 + 1 = 1.9
    assert float(params["w"][0]) == pytest.approx(0.9 - 0.19)


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_zero_gradient_moves_nothing(kind):
    state = make_state(OptimizerConfig(kind=kind))
    w0 = np.random.default_rng(1).normal(size=(3, 4))
    params = {"w": w0.copy()}
    for _ in range(3):
        optimizer_step(state, params, {"w": np.zeros_like(w0)})
    assert np.array_equal(params["w"], w0)


def test_adam_bias_correction_first_step():
    state = make_state(OptimizerConfig(kind="adam"))
    params = {"w": np.array([2.0])}
    g = np.array([0.7])
    optimizer_step(state, params, {"w": g.copy()})
    m_hat = state.m["w"] / (1 - 0.9 ** 1)
    assert m_hat[0] == pytest.approx(0.7, abs=1e-15)


def test_frozen_parameters_never_move():
    state = make_state(OptimizerConfig(kind="adam"))
    params = {"a": np.ones(3), "b": np.ones(3)}
    grads = {"a": np.full(3, 0.5), "b": np.full(3, 0.5)}
    optimizer_step(state, params, grads, frozen={"b"})
    assert not np.array_equal(params["a"], np.ones(3))
    assert np.array_equal(params["b"], np.ones(3))
    assert "b" not in state.m  # frozen tensors get no moments either


def test_step_counter_increments_once_per_call():
    state = make_state(OptimizerConfig(kind="adam"))
    params = {"a": np.ones(2), "b": np.ones(2)}
    grads = {"a": np.ones(2), "b": np.ones(2)}
    optimizer_step(state, params, grads)
    assert state.t == 1
    optimizer_step(state, params, grads)
    assert state.t == 2


def test_shape_mismatch_is_a_dimension_error():
    state = make_state(OptimizerConfig())
    with pytest.raises(DimensionError):
        optimizer_step(state, {"w": np.ones(3)}, {"w": np.ones(4)})


def test_missing_gradient_is_a_config_error():
    state = make_state(OptimizerConfig())
    with pytest.raises(ConfigError):
        optimizer_step(state, {"w": np.ones(3)}, {})


def test_unknown_kind_rejected_at_step_and_validate():
    with pytest.raises(ConfigError):
        make_state(OptimizerConfig(kind="adagrad"))
    state = OptimizerState(config=OptimizerConfig(kind="adagrad"))
    with pytest.raises(ConfigError):
        optimizer_step(state, {"w": np.ones(1)}, {"w": np.ones(1)})


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 2.0))
def test_config_validation_bounds(value):
    ok = 0.0 <= value < 1.0
    cfg = OptimizerConfig(kind="adam", beta1=value)
    if ok:
        cfg.validate()
    else:
        with pytest.raises(ConfigError):
            cfg.validate()


def test_config_rejects_nonpositive_lr_and_epsilon():
    with pytest.raises(ConfigError):
        OptimizerConfig(learning_rate=0.0).validate()
    with pytest.raises(ConfigError):
        OptimizerConfig(learning_rate=-1.0).validate()
    with pytest.raises(ConfigError):
        OptimizerConfig(epsilon=0.0).validate()
    with pytest.raises(ConfigError):
        OptimizerConfig(momentum=-0.1).validate()
