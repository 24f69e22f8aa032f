"""Layer forward/backward kernels with analytic gradients.

Every layer follows the same protocol: ``forward(x, train=False)`` caches
whatever backward needs when training, ``backward(dout)`` returns the
gradient with respect to the input and fills ``self.grads`` on
parameterized layers (keys ``"weight"`` and ``"bias"``).

Convolution runs as im2col plus matmul. Columns are laid out in
(channel, kernel-row, kernel-col) order, matching the row-major flattening
of a [Cout, Cin, 3, 3] weight tensor, so in deterministic mode the product
reduces over patches in exactly the order ``naive_conv3x3`` accumulates
them and the two routes agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DataError, DimensionError
from .tensor import matmul


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    """He-uniform draw, the init rule for fresh ReLU-network weights."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def _im2col3x3(x: np.ndarray) -> np.ndarray:
    """Unfold zero-padded 3x3 patches into rows of a [N*H*W, C*9] matrix."""
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    cols = np.empty((n, h, w, c, 3, 3), dtype=x.dtype)
    for kh in range(3):
        for kw in range(3):
            cols[:, :, :, :, kh, kw] = xp[:, :, kh : kh + h, kw : kw + w].transpose(0, 2, 3, 1)
    return cols.reshape(n * h * w, c * 9)


def _col2im3x3(dcols: np.ndarray, shape) -> np.ndarray:
    """Scatter-add column gradients back onto the padded input grid."""
    n, c, h, w = shape
    dcols = dcols.reshape(n, h, w, c, 3, 3)
    dxp = np.zeros((n, c, h + 2, w + 2), dtype=dcols.dtype)
    for kh in range(3):
        for kw in range(3):
            dxp[:, :, kh : kh + h, kw : kw + w] += dcols[:, :, :, :, kh, kw].transpose(0, 3, 1, 2)
    return np.ascontiguousarray(dxp[:, :, 1:-1, 1:-1])


class Conv3x3:
    """3x3 convolution, stride 1, zero-padding 1; spatial extents preserved."""

    kind = "conv3x3"

    def __init__(self, in_channels: int, out_channels: int, dtype=np.float32,
                 rng: np.random.Generator | None = None):
        if in_channels < 1 or out_channels < 1:
            raise ConfigError("conv3x3 channel counts must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        rng = rng or np.random.default_rng(0)
        self.weight = he_uniform(rng, (out_channels, in_channels, 3, 3), in_channels * 9, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.frozen = False
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"conv3x3 expects [N,{self.in_channels},H,W], got {x.shape}")
        n, _, h, w = x.shape
        cols = _im2col3x3(x)
        w2 = self.weight.reshape(self.out_channels, -1)
        out = matmul(cols, w2.T)
        out += self.bias
        if train:
            self._cache = (x.shape, cols)
        return np.ascontiguousarray(out.reshape(n, h, w, self.out_channels).transpose(0, 3, 1, 2))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_shape, cols = self._cache
        n, _, h, w = x_shape
        d2 = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(n * h * w, self.out_channels)
        self.grads["bias"] = dout.sum(axis=(0, 2, 3))
        self.grads["weight"] = matmul(d2.T, cols).reshape(self.weight.shape)
        dcols = matmul(d2, self.weight.reshape(self.out_channels, -1))
        return _col2im3x3(dcols, x_shape)


def naive_conv3x3(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Quadruple-loop reference convolution, the in-repo oracle for Conv3x3.

    Accumulates products in (channel, kernel-row, kernel-col) order, the
    order the im2col route reduces, with the bias added after the sum, so
    deterministic-mode Conv3x3 output matches this bit for bit.
    """
    n, ci, h, w = x.shape
    co = weight.shape[0]
    if weight.shape != (co, ci, 3, 3):
        raise DimensionError(f"weights {weight.shape} do not match input channels {ci}")
    xp = np.zeros((n, ci, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    zero = x.dtype.type(0)
    out = np.empty((n, co, h, w), dtype=x.dtype)
    for b in range(n):
        for o in range(co):
            for y in range(h):
                for xx in range(w):
                    acc = zero
                    for c in range(ci):
                        for kh in range(3):
                            for kw in range(3):
                                acc = acc + xp[b, c, y + kh, xx + kw] * weight[o, c, kh, kw]
                    out[b, o, y, xx] = acc + bias[o]
    return out


class MaxPool2x2:
    """2x2 max pooling, stride 2; halves both spatial extents."""

    kind = "maxpool2x2"

    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 4:
            raise DimensionError(f"maxpool2x2 expects rank-4 input, got {x.shape}")
        n, c, h, w = x.shape
        if h % 2 or w % 2:
            raise DimensionError(f"maxpool2x2 needs even spatial extents, got {h}x{w}")
        # Window elements flattened row-major, so argmax ties pick the
        # first maximal element and gradients route there.
        win = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
        win = np.ascontiguousarray(win).reshape(n, c, h // 2, w // 2, 4)
        idx = win.argmax(axis=-1)
        out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        if train:
            self._cache = (x.shape, idx)
        return np.ascontiguousarray(out)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        (n, c, h, w), idx = self._cache
        dwin = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dx = dwin.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return np.ascontiguousarray(dx).reshape(n, c, h, w)


class Dense:
    """Fully connected layer: x @ W + b."""

    kind = "dense"

    def __init__(self, in_features: int, out_features: int, dtype=np.float32,
                 rng: np.random.Generator | None = None):
        if in_features < 1 or out_features < 1:
            raise ConfigError("dense feature counts must be >= 1")
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.weight = he_uniform(rng, (in_features, out_features), in_features, dtype)
        self.bias = np.zeros(out_features, dtype=dtype)
        self.frozen = False
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise DimensionError(f"dense expects [N,{self.in_features}], got {x.shape}")
        out = matmul(x, self.weight)
        out += self.bias
        if train:
            self._cache = x
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._cache
        self.grads["weight"] = matmul(x.T, dout)
        self.grads["bias"] = dout.sum(axis=0)
        return matmul(dout, self.weight.T)


class ReLU:
    kind = "relu"

    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if train:
            self._cache = x > 0
        return np.maximum(x, x.dtype.type(0))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._cache


class Flatten:
    """Collapse C,H,W (row-major) into a feature vector per sample."""

    kind = "flatten"

    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if train:
            self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._cache)


def dropout_apply(x: np.ndarray, rate: float, mode: str, rng_seed):
    """Inverted dropout.

    Train mode zeroes each element independently with probability ``rate``
    and scales survivors by 1/(1-rate); infer mode is the identity. Returns
    ``(output, scaled_mask)`` where the mask is None in infer mode and is
    reused by the backward pass. The same seed always yields the same mask.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "infer"):
        raise ConfigError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" or rate == 0.0:
        return x, None
    rng = np.random.default_rng(rng_seed)
    keep = rng.random(x.shape) >= rate
    scaled = keep.astype(x.dtype) * x.dtype.type(1.0 / (1.0 - rate))
    return x * scaled, scaled


class Dropout:
    """Inverted dropout; ``seed`` is reassigned per forward by the trainer."""

    kind = "dropout"

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.seed = 0
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        out, mask = dropout_apply(x, self.rate, "train" if train else "infer", self.seed)
        self._cache = mask
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            return dout
        return dout * self._cache


def softmax_xent(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Numerically stabilized softmax with mean cross-entropy.

    Returns ``(loss, probs)``; loss is the batch mean of -log p[label].
    """
    if logits.ndim != 2:
        raise DimensionError(f"softmax_xent expects [N,K] logits, got {logits.shape}")
    n, k = logits.shape
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise DataError(f"expected {n} labels, got shape {labels.shape}")
    bad = np.nonzero((labels < 0) | (labels >= k))[0]
    if bad.size:
        raise DataError(f"label {labels[bad[0]]} out of range [0,{k}) at row {bad[0]}")
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    logp = z[np.arange(n), labels] - np.log(s[:, 0])
    return float(-logp.mean()), probs


def softmax_xent_backward(probs: np.ndarray, labels) -> np.ndarray:
    """Fused gradient of the mean cross-entropy: (probs - onehot) / N."""
    n = probs.shape[0]
    g = probs.copy()
    g[np.arange(n), np.asarray(labels, dtype=np.int64)] -= 1
    g /= n
    return g
