"""Network layers with hand-written forward and backward passes.

Each layer owns its parameters and matching gradient slots (``params`` and
``grads`` dicts with identical keys and shapes) plus whatever forward context
its backward pass needs (inputs, masks, argmax indices). The cache is only
populated by a training-mode forward; calling backward without one raises
StateError. Backward passes are written per layer rather than derived from a
tape, so each formula is individually testable against finite differences.
"""

from __future__ import annotations

import numpy as np

from . import tensor
from .errors import ConfigError, ShapeError, StateError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of (N, K) logits, computed with max-subtraction so
    large logits cannot overflow. Rows of the result sum to 1."""
    if logits.ndim != 2 or logits.shape[1] < 2:
        raise ShapeError(f"softmax expects (N, K>=2) logits, got {logits.shape}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class Layer:
    """Base class: parameter/gradient bookkeeping and the forward cache."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.training = False
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def train(self, mode: bool = True):
        self.training = mode

    def eval(self):
        self.train(False)

    def reset_cache(self):
        self._cache = None

    def _require_cache(self):
        if self._cache is None:
            raise StateError(
                f"{type(self).__name__}.backward called without a cached "
                "training-mode forward pass"
            )
        return self._cache

    def __call__(self, x):
        return self.forward(x)


class Conv2d(Layer):
    """2-D convolution, implemented as im2col followed by one GEMM.

    out[n, co, i, j] = bias[co]
        + sum over (ci, di, dj) of weight[co, ci, di, dj] * padded_in[...]

    Weight shape (out_channels, in_channels, kh, kw); with the 3x3 / stride 1
    / pad 1 configuration used throughout the VGG stack, spatial dimensions
    are preserved.
    """

    def __init__(self, in_channels, out_channels, kernel_size=(3, 3),
                 stride=(1, 1), padding=(1, 1), dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = tuple(kernel_size)
        self.stride = tuple(stride)
        self.padding = tuple(padding)
        kh, kw = self.kernel_size
        self.params = {
            "weight": np.zeros((out_channels, in_channels, kh, kw), dtype=dtype),
            "bias": np.zeros(out_channels, dtype=dtype),
        }

    def forward(self, x):
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ShapeError(
                f"Conv2d expects {self.in_channels} input channels, got {c} "
                f"(input shape {x.shape})"
            )
        cols = tensor.im2col(x, self.kernel_size, self.stride, self.padding)
        weight = self.params["weight"]
        w2d = weight.reshape(self.out_channels, -1)
        out2d = tensor.matmul(w2d, cols) + self.params["bias"][:, None]
        kh, kw = self.kernel_size
        ho = tensor.conv_output_size(h, kh, self.stride[0], self.padding[0])
        wo = tensor.conv_output_size(w, kw, self.stride[1], self.padding[1])
        if self.training:
            self._cache = (cols, x.shape)
        return np.ascontiguousarray(
            out2d.reshape(self.out_channels, n, ho, wo).transpose(1, 0, 2, 3)
        )

    def backward(self, grad_out):
        cols, in_shape = self._require_cache()
        g2d = np.ascontiguousarray(
            grad_out.transpose(1, 0, 2, 3).reshape(self.out_channels, -1)
        )
        w2d = self.params["weight"].reshape(self.out_channels, -1)
        self.grads["weight"] = tensor.matmul(g2d, cols.T).reshape(
            self.params["weight"].shape
        )
        self.grads["bias"] = g2d.sum(axis=1)
        grad_cols = tensor.matmul(w2d.T, g2d)
        return tensor.col2im(grad_cols, in_shape, self.kernel_size,
                             self.stride, self.padding)

    def __repr__(self):
        return (f"Conv2d({self.in_channels}, {self.out_channels}, "
                f"kernel_size={self.kernel_size}, stride={self.stride}, "
                f"padding={self.padding})")


class ReLU(Layer):
    """Elementwise max(0, x); backward gates by the sign of the cached input."""

    def forward(self, x):
        if self.training:
            self._cache = x
        return np.maximum(x, 0)

    def backward(self, grad_out):
        x = self._require_cache()
        return np.where(x > 0, grad_out, 0)

    def __repr__(self):
        return "ReLU()"


class MaxPool2d(Layer):
    """Non-overlapping max pooling (kernel == stride, both spatial dims
    divisible by the kernel). Argmax positions are cached so backward routes
    each gradient to exactly one input per window; ties go to the first
    element in row-major window order."""

    def __init__(self, kernel_size=2, stride=2):
        super().__init__()
        if kernel_size != stride:
            raise ConfigError("MaxPool2d supports only kernel_size == stride")
        self.kernel_size = kernel_size

    def forward(self, x):
        n, c, h, w = x.shape
        k = self.kernel_size
        if h % k or w % k:
            raise ShapeError(
                f"MaxPool2d({k}) needs spatial dims divisible by {k}, "
                f"got {h}x{w}"
            )
        ho, wo = h // k, w // k
        windows = x.reshape(n, c, ho, k, wo, k).transpose(0, 1, 2, 4, 3, 5)
        windows = windows.reshape(n, c, ho, wo, k * k)
        if self.training:
            argmax = windows.argmax(axis=4)
            self._cache = (argmax, x.shape)
            out = np.take_along_axis(windows, argmax[..., None], axis=4)[..., 0]
        else:
            out = windows.max(axis=4)
        return np.ascontiguousarray(out)

    def backward(self, grad_out):
        argmax, in_shape = self._require_cache()
        n, c, h, w = in_shape
        k = self.kernel_size
        ho, wo = h // k, w // k
        scatter = np.zeros((n, c, ho, wo, k * k), dtype=grad_out.dtype)
        np.put_along_axis(scatter, argmax[..., None], grad_out[..., None], axis=4)
        scatter = scatter.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5)
        return np.ascontiguousarray(scatter.reshape(n, c, h, w))

    def __repr__(self):
        return f"MaxPool2d(kernel_size={self.kernel_size}, stride={self.kernel_size})"


class AdaptiveAvgPool2d(Layer):
    """Average pooling onto a fixed output grid.

    Output cell (i, j) averages the input region
    [floor(i*H/oh), ceil((i+1)*H/oh)) x [floor(j*W/ow), ceil((j+1)*W/ow));
    backward spreads each gradient uniformly over its region. Regions of
    adjacent cells may overlap when H or W is not a multiple of the grid.
    """

    def __init__(self, output_size=(7, 7)):
        super().__init__()
        self.output_size = tuple(output_size)

    @staticmethod
    def _bounds(size, out):
        return [(i * size // out, -((i + 1) * size // -out)) for i in range(out)]

    def forward(self, x):
        n, c, h, w = x.shape
        oh, ow = self.output_size
        if h < oh or w < ow:
            raise ShapeError(
                f"AdaptiveAvgPool2d{self.output_size} needs input at least "
                f"that large, got {h}x{w}"
            )
        rows = self._bounds(h, oh)
        cols = self._bounds(w, ow)
        out = np.empty((n, c, oh, ow), dtype=x.dtype)
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                out[:, :, i, j] = x[:, :, r0:r1, c0:c1].mean(axis=(2, 3))
        if self.training:
            self._cache = (rows, cols, x.shape)
        return out

    def backward(self, grad_out):
        rows, cols, in_shape = self._require_cache()
        grad_in = np.zeros(in_shape, dtype=grad_out.dtype)
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                area = (r1 - r0) * (c1 - c0)
                grad_in[:, :, r0:r1, c0:c1] += \
                    grad_out[:, :, i, j][:, :, None, None] / area
        return grad_in

    def __repr__(self):
        return f"AdaptiveAvgPool2d(output_size={self.output_size})"


class Flatten(Layer):
    """Collapse all non-batch dimensions: (N, C, H, W) -> (N, C*H*W)."""

    def forward(self, x):
        if self.training:
            self._cache = x.shape
        return np.ascontiguousarray(x.reshape(x.shape[0], -1))

    def backward(self, grad_out):
        in_shape = self._require_cache()
        return grad_out.reshape(in_shape)

    def __repr__(self):
        return "Flatten()"


class Linear(Layer):
    """Affine map out = x @ weight.T + bias with weight shape (out, in)."""

    def __init__(self, in_features, out_features, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "weight": np.zeros((out_features, in_features), dtype=dtype),
            "bias": np.zeros(out_features, dtype=dtype),
        }

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"Linear expects (N, {self.in_features}) input, got {x.shape}"
            )
        if self.training:
            self._cache = x
        return tensor.matmul(x, self.params["weight"].T) + self.params["bias"]

    def backward(self, grad_out):
        x = self._require_cache()
        self.grads["weight"] = tensor.matmul(grad_out.T, x)
        self.grads["bias"] = grad_out.sum(axis=0)
        return tensor.matmul(grad_out, self.params["weight"])

    def __repr__(self):
        return (f"Linear(in_features={self.in_features}, "
                f"out_features={self.out_features}, bias=True)")


class Dropout(Layer):
    """Inverted dropout: in training each element is zeroed with probability
    p and survivors are scaled by 1/(1-p), so evaluation is a pure identity.
    The mask is cached for backward. Draws come from the layer's own
    ``rng``; reseed it (see ``reseed``) for reproducible runs."""

    def __init__(self, p=0.5, seed=0):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.rng = np.random.default_rng(seed)

    def reseed(self, seed):
        self.rng = np.random.default_rng(seed)

    def forward(self, x):
        if not self.training:
            return x
        if self.p == 0.0:
            self._cache = np.ones_like(x)
            return x
        keep = (self.rng.random(x.shape) >= self.p).astype(x.dtype)
        scale = keep / (1.0 - self.p)
        self._cache = scale
        return x * scale

    def backward(self, grad_out):
        scale = self._require_cache()
        return grad_out * scale

    def __repr__(self):
        return f"Dropout(p={self.p})"


class Softmax(Layer):
    """Row-wise softmax as a layer; the training loss uses the fused
    softmax+cross-entropy gradient instead, so this layer only appears when a
    network needs explicit probabilities."""

    def forward(self, x):
        y = softmax(x)
        if self.training:
            self._cache = y
        return y

    def backward(self, grad_out):
        y = self._require_cache()
        inner = (grad_out * y).sum(axis=1, keepdims=True)
        return y * (grad_out - inner)

    def __repr__(self):
        return "Softmax()"
