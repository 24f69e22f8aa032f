"""First-order parameter-update rules: SGD, Adam, RMSProp.

All three share one entry point, ``optimizer_step``, which walks named
parameter tensors and applies the update in place. Moment accumulators live
in ``OptimizerState`` keyed by parameter name, so a state object follows one
network for the whole run. Frozen parameters are skipped entirely: their
moments stay untouched and their values never move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError

OPTIMIZER_KINDS = ("sgd", "adam", "rmsprop")


@dataclass
class OptimizerConfig:
    kind: str = "sgd"
    learning_rate: float = 0.0001
    momentum: float = 0.0      # sgd only; classical (heavy-ball) accumulation
    beta1: float = 0.9         # adam first-moment decay
    beta2: float = 0.999       # adam second-moment decay
    rho: float = 0.9           # rmsprop accumulator decay
    epsilon: float = 1e-8

    def validate(self) -> "OptimizerConfig":
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}; "
                              f"expected one of {', '.join(OPTIMIZER_KINDS)}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.momentum < 0:
            raise ConfigError(f"momentum must be >= 0, got {self.momentum}")
        for name in ("beta1", "beta2", "rho"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        return self


@dataclass
class OptimizerState:
    config: OptimizerConfig
    t: int = 0
    # Keyed by parameter name; allocated lazily on first step so the state
    # object needs no advance knowledge of the network.
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def make_state(config: OptimizerConfig) -> OptimizerState:
    return OptimizerState(config=config.validate())


def _moment(store: dict, name: str, like: np.ndarray) -> np.ndarray:
    if name not in store:
        store[name] = np.zeros_like(like)
    return store[name]


def optimizer_step(state: OptimizerState, params: dict[str, np.ndarray],
                   grads: dict[str, np.ndarray], frozen=()) -> None:
    """Apply one update to every non-frozen parameter, in place.

    ``frozen`` is a collection of parameter names to skip. The step counter
    advances exactly once per call regardless of how many tensors move.
    """
    cfg = state.config
    if cfg.kind not in OPTIMIZER_KINDS:
        raise ConfigError(f"unknown optimizer kind {cfg.kind!r}")
    state.t += 1
    t = state.t
    lr = cfg.learning_rate
    frozen = set(frozen)

    for name, w in params.items():
        if name in frozen:
            continue
        g = grads.get(name)
        if g is None:
            raise ConfigError(f"no gradient supplied for parameter {name!r}")
        if g.shape != w.shape:
            raise DimensionError(
                f"parameter {name} has shape {w.shape} but gradient has {g.shape}")

        if cfg.kind == "sgd":
            if cfg.momentum > 0:
                vel = _moment(state.m, name, w)
                vel *= cfg.momentum
                vel += g
                w -= lr * vel
            else:
                w -= lr * g
        elif cfg.kind == "adam":
            m = _moment(state.m, name, w)
            v = _moment(state.v, name, w)
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * np.square(g)
            m_hat = m / (1.0 - cfg.beta1 ** t)
            v_hat = v / (1.0 - cfg.beta2 ** t)
            w -= lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        else:  # rmsprop
            v = _moment(state.v, name, w)
            v *= cfg.rho
            v += (1.0 - cfg.rho) * np.square(g)
            w -= lr * g / (np.sqrt(v) + cfg.epsilon)
