"""VGG16 model assembly, initialization, and the VGGW weight file format.

The full architecture is five conv blocks (channel progression
3 -> 64x2 -> 128x2 -> 256x3 -> 512x3 -> 512x3, every conv 3x3 / stride 1 /
pad 1, each block closed by a 2x2 max pool), an adaptive average pool, and a
three-layer classifier (25088 -> 4096 -> 4096 -> num_classes) with dropout
after the first two linears. A width-scaled "vgg-mini" variant keeps every
layer type and code path but shrinks channel and hidden widths by a
multiplier and accepts 32x32 input with a 1x1 adaptive pool, so end-to-end
training is minutes-fast on one CPU core.

Weights are stored in the VGGW v1 binary interchange format (see
``save_checkpoint``), shared by checkpoints and pretrained imports.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import (
    CheckpointFormatError,
    CheckpointIntegrityError,
    ConfigError,
    ShapeError,
)
from .layers import (
    AdaptiveAvgPool2d,
    Conv2d,
    Dropout,
    Flatten,
    Layer,
    Linear,
    MaxPool2d,
    ReLU,
)

# Channels per conv layer, blocks separated by max pools.
CONV_BLOCKS = ((64, 64), (128, 128), (256, 256, 256), (512, 512, 512), (512, 512, 512))
HIDDEN_FEATURES = 4096
IN_CHANNELS = 3
ARCHITECTURES = ("vgg16", "vgg-mini")

VGGW_MAGIC = b"VGGW"
VGGW_VERSION = 1
VGGW_DTYPE_F32 = 0


@dataclass
class ModelConfig:
    architecture: str = "vgg16"
    num_classes: int = 2
    input_size: tuple[int, int] = (224, 224)
    dropout_p: float = 0.5
    width_multiplier: float = 1.0

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0.0 < self.width_multiplier <= 1.0:
            raise ConfigError(
                f"width_multiplier must be in (0, 1], got {self.width_multiplier}"
            )
        if self.architecture == "vgg16":
            if self.width_multiplier != 1.0:
                raise ConfigError("vgg16 requires width_multiplier == 1")
            if tuple(self.input_size) != (224, 224):
                raise ConfigError("vgg16 requires 224x224 input")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        h, w = self.input_size
        if h < 32 or w < 32 or h % 32 or w % 32:
            raise ConfigError(
                f"input size must be a positive multiple of 32, got {h}x{w}"
            )
        return self

    def pool_output_size(self) -> tuple[int, int]:
        # The five pooling stages downsample by 32; the adaptive pool then
        # maps whatever remains onto at most a 7x7 grid (so 224 -> 7, 32 -> 1).
        h, w = self.input_size
        return (min(7, max(1, h // 32)), min(7, max(1, w // 32)))

    def scaled(self, width: int) -> int:
        return math.ceil(width * self.width_multiplier)


class Model:
    """Ordered layer stack in three sections (features, avgpool+flatten,
    classifier) with stable parameter names like ``features.0.weight``.

    One thread owns a model during training; eval-mode forward is a pure
    function of parameters and input, so read-only sharing is safe.
    """

    def __init__(self, config: ModelConfig, features, avgpool, classifier,
                 dtype=np.float32):
        self.config = config
        self.features: list[Layer] = features
        self.avgpool = avgpool
        self.flatten = Flatten()
        self.classifier: list[Layer] = classifier
        self.dtype = dtype
        self.training = False
        self.eval()

    def iter_layers(self) -> Iterator[Layer]:
        yield from self.features
        yield self.avgpool
        yield self.flatten
        yield from self.classifier

    def train(self, mode: bool = True):
        self.training = mode
        for layer in self.iter_layers():
            layer.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def reseed_dropout(self, seed: int):
        """Give every dropout layer a generator derived from (seed, index)."""
        for i, layer in enumerate(self.iter_layers()):
            if isinstance(layer, Dropout):
                layer.rng = np.random.default_rng([seed, i])

    def forward(self, batch: np.ndarray) -> np.ndarray:
        expected = (IN_CHANNELS, *self.config.input_size)
        if batch.ndim != 4 or batch.shape[1:] != expected:
            raise ShapeError(
                f"model expects batches of shape (N, {expected[0]}, "
                f"{expected[1]}, {expected[2]}), got {batch.shape}"
            )
        x = batch.astype(self.dtype, copy=False)
        for layer in self.iter_layers():
            x = layer.forward(x)
        return x

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        grad = grad_logits
        for layer in reversed(list(self.iter_layers())):
            grad = layer.backward(grad)
        return grad

    def __call__(self, batch):
        return self.forward(batch)

    def _named_layers(self):
        for i, layer in enumerate(self.features):
            yield f"features.{i}", layer
        yield "avgpool", self.avgpool
        for i, layer in enumerate(self.classifier):
            yield f"classifier.{i}", layer

    def named_params(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in self._named_layers():
            for key, value in layer.params.items():
                out[f"{prefix}.{key}"] = value
        return out

    def named_grads(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in self._named_layers():
            for key, value in layer.grads.items():
                out[f"{prefix}.{key}"] = value
        return out

    def set_param(self, name: str, value: np.ndarray):
        prefix, key = name.rsplit(".", 1)
        for layer_name, layer in self._named_layers():
            if layer_name == prefix and key in layer.params:
                layer.params[key][...] = value.astype(self.dtype, copy=False)
                return
        raise KeyError(name)

    def feature_param_names(self) -> list[str]:
        return [n for n in self.named_params() if n.startswith("features.")]

    def head_param_names(self) -> list[str]:
        last_linear = max(
            i for i, layer in enumerate(self.classifier) if isinstance(layer, Linear)
        )
        return [f"classifier.{last_linear}.weight", f"classifier.{last_linear}.bias"]


def build_model(config: ModelConfig, dtype=np.float32) -> Model:
    """Instantiate the layer stack described by ``config`` with zeroed
    parameters; call ``init_weights`` (or load a checkpoint) to fill them."""
    config.validate()
    features: list[Layer] = []
    in_ch = IN_CHANNELS
    for block in CONV_BLOCKS:
        for width in block:
            out_ch = config.scaled(width)
            features.append(Conv2d(in_ch, out_ch, dtype=dtype))
            features.append(ReLU())
            in_ch = out_ch
        features.append(MaxPool2d(2, 2))

    pool = AdaptiveAvgPool2d(config.pool_output_size())
    ph, pw = config.pool_output_size()
    hidden = config.scaled(HIDDEN_FEATURES)
    classifier: list[Layer] = [
        Linear(in_ch * ph * pw, hidden, dtype=dtype),
        ReLU(),
        Dropout(config.dropout_p),
        Linear(hidden, hidden, dtype=dtype),
        ReLU(),
        Dropout(config.dropout_p),
        Linear(hidden, config.num_classes, dtype=dtype),
    ]
    return Model(config, features, pool, classifier, dtype=dtype)


def param_count(model: Model) -> int:
    """Total element count over all trainable tensors."""
    return sum(p.size for p in model.named_params().values())


def _he_uniform_fill(layer, rng, dtype):
    weight = layer.params["weight"]
    if isinstance(layer, Conv2d):
        fan_in = weight.shape[1] * weight.shape[2] * weight.shape[3]
    else:
        fan_in = weight.shape[1]
    bound = math.sqrt(6.0 / fan_in)
    weight[...] = rng.uniform(-bound, bound, size=weight.shape).astype(dtype)
    layer.params["bias"][...] = 0.0


def init_weights(model: Model, scheme: str = "he-uniform", seed: int = 0,
                 path=None) -> Model:
    """Fill parameters either from the He-uniform distribution
    (U(-b, b) with b = sqrt(6/fan_in), biases zero) or from a VGGW file."""
    if scheme == "he-uniform":
        rng = np.random.default_rng(seed)
        for layer in model.iter_layers():
            if isinstance(layer, (Conv2d, Linear)):
                _he_uniform_fill(layer, rng, model.dtype)
        return model
    if scheme == "interchange-file":
        if path is None:
            raise ConfigError("interchange-file initialization requires a path")
        return load_checkpoint(model, path)
    raise ConfigError(f"unknown init scheme {scheme!r}")


def describe(model: Model) -> str:
    """Architecture printout, one indexed line per layer per section."""
    lines = ["VGG(", "  (features): Sequential("]
    lines += [f"    ({i}): {layer!r}" for i, layer in enumerate(model.features)]
    lines.append("  )")
    lines.append(f"  (avgpool): {model.avgpool!r}")
    lines.append("  (classifier): Sequential(")
    lines += [f"    ({i}): {layer!r}" for i, layer in enumerate(model.classifier)]
    lines.append("  )")
    lines.append(")")
    return "\n".join(lines)


# --- VGGW v1 binary interchange format ------------------------------------
#
# magic "VGGW" | u32 LE version=1 | u32 LE tensor count | records...
# record: u16 LE name length | UTF-8 name | u8 dtype (0=float32) | u8 rank |
#         rank x u32 LE dims | dim-product x 4-byte LE IEEE-754 float32,
#         row-major. No padding between records.


def save_checkpoint(model: Model, path):
    """Write all parameters to ``path`` in VGGW v1, in declaration order."""
    params = model.named_params()
    with open(path, "wb") as fh:
        fh.write(VGGW_MAGIC)
        fh.write(struct.pack("<II", VGGW_VERSION, len(params)))
        for name, value in params.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", VGGW_DTYPE_F32, value.ndim))
            fh.write(struct.pack(f"<{value.ndim}I", *value.shape))
            fh.write(np.ascontiguousarray(value, dtype="<f4").tobytes())
    return path


def _read_exact(fh, count, what):
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointFormatError(f"file truncated while reading {what}")
    return data


def read_vggw(path) -> dict[str, np.ndarray]:
    """Parse a VGGW file into an ordered name -> float32 array mapping."""
    tensors: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic bytes")
        if magic != VGGW_MAGIC:
            raise CheckpointFormatError(f"bad magic bytes {magic!r}")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VGGW_VERSION:
            raise CheckpointFormatError(f"unsupported format version {version}")
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            try:
                name = _read_exact(fh, name_len, "tensor name").decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CheckpointFormatError(f"undecodable tensor name: {exc}") from exc
            dtype_code, rank = struct.unpack("<BB", _read_exact(fh, 2, name))
            if dtype_code != VGGW_DTYPE_F32:
                raise CheckpointFormatError(
                    f"tensor {name}: unsupported dtype code {dtype_code}"
                )
            dims = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, name))
            size = math.prod(dims) if rank else 1
            payload = _read_exact(fh, 4 * size, f"{name} payload")
            if name in tensors:
                raise CheckpointFormatError(f"duplicate tensor {name}")
            tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims)
        if fh.read(1):
            raise CheckpointFormatError("trailing bytes after final tensor record")
    return tensors


def load_checkpoint(model: Model, path, replace_head: bool = False,
                    head_seed: int = 0) -> Model:
    """Load a VGGW file into ``model``, validating every tensor's name and
    shape against the architecture.

    With ``replace_head`` the final classifier layer is ignored in the file
    (it may have been trained for any class count) and re-initialized
    He-uniform for the model's own head, leaving all other tensors loaded
    verbatim; feature tensors are never altered by the replacement.
    """
    tensors = read_vggw(path)
    head_names = set(model.head_param_names()) if replace_head else set()
    expected = model.named_params()

    for name in tensors:
        if name not in expected:
            raise CheckpointIntegrityError(f"unexpected tensor {name} in {path}")
    missing = [n for n in expected if n not in tensors and n not in head_names]
    if missing:
        raise CheckpointIntegrityError(f"checkpoint missing tensor {missing[0]}")
    for name, value in tensors.items():
        if name in head_names:
            continue
        if value.shape != expected[name].shape:
            raise CheckpointIntegrityError(
                f"tensor {name} has shape {value.shape}, "
                f"model expects {expected[name].shape}"
            )
        model.set_param(name, value)
    if replace_head:
        head_linear = model.classifier[
            max(i for i, l in enumerate(model.classifier) if isinstance(l, Linear))
        ]
        _he_uniform_fill(head_linear, np.random.default_rng(head_seed), model.dtype)
    return model
