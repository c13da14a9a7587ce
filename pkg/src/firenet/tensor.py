"""Dense tensor conventions and the numeric kernels every layer builds on.

Tensors are plain C-contiguous numpy arrays: float32 for training and
inference, float64 for finite-difference gradient verification. 4-D tensors
follow the NCHW layout (batch, channels, height, width) and flat indexing is
row-major, so the flat index of (n, c, h, w) is ((n*C + c)*H + h)*W + w.

Two kernels carry nearly all of the arithmetic:

- ``matmul``: 2-D matrix multiply, delegated to numpy's BLAS-backed GEMM
  (itself a cache-blocked implementation with a fixed accumulation order,
  so results are bit-reproducible for a given build).
- ``im2col`` / ``col2im``: lowering of convolution onto GEMM by unrolling
  receptive-field patches into matrix columns, and its adjoint used by the
  backward pass.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeError

FLOAT_DTYPES = (np.float32, np.float64)


def as_tensor(data, dtype=np.float32) -> np.ndarray:
    """Return ``data`` as a C-contiguous float tensor, validating its shape.

    Accepts anything ``np.asarray`` does. Raises ShapeError if any dimension
    is smaller than 1 (zero-size tensors are not part of the contract).
    """
    if dtype not in FLOAT_DTYPES:
        raise ShapeError(f"unsupported dtype {dtype!r}; expected float32 or float64")
    arr = np.ascontiguousarray(np.asarray(data, dtype=dtype))
    if any(dim < 1 for dim in arr.shape):
        raise ShapeError(f"all dimensions must be >= 1, got shape {arr.shape}")
    return arr


def flat_index(shape, index) -> int:
    """Row-major flat offset of a multi-index into a tensor of ``shape``."""
    if len(shape) != len(index):
        raise ShapeError(f"index {index} does not match rank of shape {shape}")
    flat = 0
    for dim, i in zip(shape, index):
        if not 0 <= i < dim:
            raise ShapeError(f"index {index} out of bounds for shape {shape}")
        flat = flat * dim + i
    return flat


def unflat_index(shape, flat: int) -> tuple:
    """Inverse of flat_index: multi-index of a row-major flat offset."""
    total = math.prod(shape)
    if not 0 <= flat < total:
        raise ShapeError(f"flat index {flat} out of bounds for shape {shape}")
    index = []
    for dim in reversed(shape):
        index.append(flat % dim)
        flat //= dim
    return tuple(reversed(index))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Multiply a (M, K) by a (K, N) matrix.

    Raises ShapeError naming both shapes if the inner dimensions disagree.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.shape} x {b.shape}"
        )
    return np.matmul(a, b)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    """Output extent of a convolution along one axis; ShapeError if not integral."""
    span = size + 2 * pad - kernel
    if span < 0 or span % stride != 0:
        raise ShapeError(
            f"window {kernel}/stride {stride}/pad {pad} does not tile extent {size}"
        )
    return span // stride + 1


def im2col(x: np.ndarray, kernel, stride=(1, 1), pad=(0, 0)) -> np.ndarray:
    """Unroll receptive-field patches of an NCHW tensor into matrix columns.

    Column j holds the patch for output position j, positions ordered
    row-major over (n, out_row, out_col); rows are ordered row-major over
    (channel, kernel_row, kernel_col). Padded (out-of-bounds) entries are 0.

    Returns a (C*kh*kw, N*Ho*Wo) matrix of the input's dtype.
    """
    if x.ndim != 4:
        raise ShapeError(f"im2col expects an NCHW tensor, got shape {x.shape}")
    n, c, h, w = x.shape
    kh, kw = kernel
    sh, sw = stride
    ph, pw = pad
    ho = conv_output_size(h, kh, sh, ph)
    wo = conv_output_size(w, kw, sw, pw)

    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::sh, ::sw]          # (n, c, ho, wo, kh, kw)
    cols = windows.transpose(1, 4, 5, 0, 2, 3)   # (c, kh, kw, n, ho, wo)
    return np.ascontiguousarray(cols.reshape(c * kh * kw, n * ho * wo))


def col2im(cols: np.ndarray, shape, kernel, stride=(1, 1), pad=(0, 0)) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back onto an NCHW tensor.

    ``shape`` is the original (unpadded) input shape. Satisfies
    <im2col(x), y> == <x, col2im(y)> for all x, y of matching shapes.
    """
    n, c, h, w = shape
    kh, kw = kernel
    sh, sw = stride
    ph, pw = pad
    ho = conv_output_size(h, kh, sh, ph)
    wo = conv_output_size(w, kw, sw, pw)
    expected = (c * kh * kw, n * ho * wo)
    if cols.shape != expected:
        raise ShapeError(f"col2im expects shape {expected}, got {cols.shape}")

    patches = cols.reshape(c, kh, kw, n, ho, wo)
    out = np.zeros((n, c, h + 2 * ph, w + 2 * pw), dtype=cols.dtype)
    for di in range(kh):
        for dj in range(kw):
            out[:, :, di:di + sh * ho:sh, dj:dj + sw * wo:sw] += \
                patches[:, di, dj].transpose(1, 0, 2, 3)
    return np.ascontiguousarray(out[:, :, ph:ph + h, pw:pw + w])
